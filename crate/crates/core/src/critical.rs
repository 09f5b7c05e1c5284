//! Critical points of `k` on S³ by multistart Newton in moving charts.

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curvature::{series_quantities, CurvatureSpec};
use crate::error::{Error, Result};
use crate::geometry::{make_frame, quasi_uniform_points, stereo_to_sphere, SpherePoint};

pub const DEFAULT_STARTS: usize = 512;
pub const MIN_STARTS: usize = 64;
/// Chordal distance below which two converged points are the same.
pub const DEDUPE_TOL: f64 = 1e-6;
/// Gradient norm accepted as critical.
pub const GRAD_TOL: f64 = 1e-9;
/// A critical point is degenerate when some Hessian eigenvalue is this small.
pub const DEGENERACY_TOL: f64 = 1e-7;
pub const LAPLACIAN_ZERO_TOL: f64 = 1e-7;

const MAX_ITER: usize = 200;
const MAX_STEP: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalRecord {
    pub location: SpherePoint,
    pub grad_norm: f64,
    /// Ascending.
    pub hessian_eigs: [f64; 3],
    pub morse_index: usize,
    pub laplacian: f64,
    pub nondegenerate: bool,
}

impl CriticalRecord {
    pub fn min_abs_eig(&self) -> f64 {
        self.hessian_eigs.iter().fold(f64::MAX, |m, e| m.min(e.abs()))
    }
}

/// Gradient and Hessian of the pullback at the chart center, in the frame seeded by `seed`.
fn local_derivatives(spec: &CurvatureSpec, p: &SpherePoint, seed: u64) -> (crate::geometry::ChartFrame, Vector3<f64>, Matrix3<f64>) {
    let frame = make_frame(p, seed);
    let q = series_quantities(&spec.pullback_series(&frame, &Vector3::zeros(), 2, true));
    (frame, q.gradient, q.hessian)
}

/// Damped Newton from one start; `None` if it fails to converge.
fn newton(spec: &CurvatureSpec, start: SpherePoint, seed: u64) -> Option<SpherePoint> {
    let mut p = start;
    let (mut frame, mut g, mut h) = local_derivatives(spec, &p, seed);
    for _ in 0..MAX_ITER {
        let gn = g.norm();
        if gn < 1e-13 {
            return Some(p);
        }
        let mut step = match h.lu().solve(&(-g)) {
            Some(s) if s.iter().all(|v| v.is_finite()) => s,
            _ => -g,
        };
        let len = step.norm();
        if len > MAX_STEP {
            step *= MAX_STEP / len;
        }
        // halve until the gradient decreases
        let mut accepted = false;
        for _ in 0..40 {
            let trial = stereo_to_sphere(&frame, &step);
            let (f2, g2, h2) = local_derivatives(spec, &trial, seed);
            if g2.norm() < gn {
                p = trial;
                frame = f2;
                g = g2;
                h = h2;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            return (gn < GRAD_TOL * 1e-2).then_some(p);
        }
    }
    (g.norm() < GRAD_TOL * 1e-2).then_some(p)
}

/// Classification of a point from its order-2 jet (frame seed 0).
pub fn classify_point(spec: &CurvatureSpec, p: &SpherePoint) -> CriticalRecord {
    let (_, g, h) = local_derivatives(spec, p, 0);
    let eig = SymmetricEigen::new(h);
    let mut e = [eig.eigenvalues[0], eig.eigenvalues[1], eig.eigenvalues[2]];
    e.sort_by(f64::total_cmp);
    let nondegenerate = e.iter().all(|v| v.abs() > DEGENERACY_TOL);
    CriticalRecord {
        location: *p,
        grad_norm: g.norm(),
        hessian_eigs: e,
        morse_index: e.iter().filter(|v| **v < 0.0).count(),
        laplacian: h.trace(),
        nondegenerate,
    }
}

fn location_order(a: &SpherePoint, b: &SpherePoint) -> std::cmp::Ordering {
    // round away last-bit noise so that ± pairs sort stably
    let key = |p: &SpherePoint| p.to_array().map(|c| (c * 1e9).round());
    let (ka, kb) = (key(a), key(b));
    ka.iter().zip(&kb).map(|(x, y)| y.total_cmp(x)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
}

/// All critical points found from `n_starts` quasi-uniform starts plus `±Eᵢ`, sorted by location.
pub fn find_critical_points(spec: &CurvatureSpec, n_starts: usize, seed: u64) -> Result<Vec<CriticalRecord>> {
    if n_starts < MIN_STARTS {
        return Err(Error::Invalid(format!("n_starts = {n_starts} < {MIN_STARTS}")));
    }
    let mut starts: Vec<SpherePoint> = (1..=4).flat_map(|i| [SpherePoint::basis(i), SpherePoint::basis(i).antipode()]).collect();
    starts.extend(quasi_uniform_points(n_starts, (seed % 1_000_003) as usize));
    let converged: Vec<Option<SpherePoint>> =
        starts.par_iter().enumerate().map(|(i, s)| newton(spec, *s, seed.wrapping_add(i as u64))).collect();

    let mut unique: Vec<SpherePoint> = Vec::new();
    for p in converged.into_iter().flatten() {
        if unique.iter().all(|q| q.chordal_distance(&p) > DEDUPE_TOL) {
            unique.push(p);
        }
    }
    if unique.is_empty() {
        return Err(Error::NonConvergence { starts: starts.len() });
    }
    unique.sort_by(location_order);
    let records: Vec<CriticalRecord> = unique.iter().map(|p| classify_point(spec, p)).collect();
    if let Some(bad) = records.iter().find(|r| !r.nondegenerate) {
        return Err(Error::DegenerateFunction { location: bad.location.to_array(), min_eig: bad.min_abs_eig() });
    }
    Ok(records)
}

/// Upper edge of the inconclusive band, in units of the zero tolerance.
pub const INCONCLUSIVE_FACTOR: f64 = 2.0;

/// Sign of a quantity against a zero tolerance, with an inconclusive band `[tol, 2·tol)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Negative,
    Zero,
    Positive,
    Inconclusive,
}

impl Sign {
    pub fn of(v: f64, tol: f64) -> Sign {
        let a = v.abs();
        if a < tol {
            Sign::Zero
        } else if a < INCONCLUSIVE_FACTOR * tol {
            Sign::Inconclusive
        } else if v < 0.0 {
            Sign::Negative
        } else {
            Sign::Positive
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Sign::Negative => "<0",
            Sign::Zero => "=0",
            Sign::Positive => ">0",
            Sign::Inconclusive => "?",
        }
    }
}

/// Laplacian zero tolerance scaled by the size of the Hessian.
pub fn laplacian_tol(r: &CriticalRecord) -> f64 {
    let scale = r.hessian_eigs.iter().fold(1.0f64, |m, e| m.max(e.abs()));
    LAPLACIAN_ZERO_TOL * scale
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassRow {
    pub location: SpherePoint,
    pub laplacian_sign: Sign,
    pub morse_index: usize,
}

pub fn classify_table(records: &[CriticalRecord]) -> Vec<ClassRow> {
    records
        .iter()
        .map(|r| ClassRow { location: r.location, laplacian_sign: Sign::of(r.laplacian, laplacian_tol(r)), morse_index: r.morse_index })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvature::AmbientPoly;

    fn find(r: &[CriticalRecord], p: SpherePoint) -> &CriticalRecord {
        r.iter().find(|c| c.location.chordal_distance(&p) < 1e-8).expect("point present")
    }

    #[test]
    fn k1_has_eight_points() {
        let spec = CurvatureSpec::new(AmbientPoly::diagonal_quadratic([2.0, 6.0, 7.0, 8.0]));
        let r = find_critical_points(&spec, 128, 0).unwrap();
        assert_eq!(r.len(), 8);
        for i in 1..=4 {
            let a = find(&r, SpherePoint::basis(i));
            let b = find(&r, SpherePoint::basis(i).antipode());
            assert_eq!(a.morse_index, i - 1);
            assert_eq!(a.morse_index, b.morse_index);
            assert!(a.grad_norm < GRAD_TOL);
        }
    }

    #[test]
    fn linear_function() {
        let spec = CurvatureSpec::new(AmbientPoly::new([([0; 4], 2.0), ([1, 0, 0, 0], 1.0)]));
        let r = find_critical_points(&spec, 64, 3).unwrap();
        assert_eq!(r.len(), 2);
        assert_eq!(find(&r, SpherePoint::basis(1)).morse_index, 3);
        assert_eq!(find(&r, SpherePoint::basis(1).antipode()).morse_index, 0);
    }

    #[test]
    fn constant_is_degenerate() {
        let spec = CurvatureSpec::new(AmbientPoly::constant(6.0));
        assert!(matches!(find_critical_points(&spec, 64, 0), Err(Error::DegenerateFunction { .. })));
    }

    #[test]
    fn too_few_starts() {
        let spec = CurvatureSpec::new(AmbientPoly::constant(6.0));
        assert!(matches!(find_critical_points(&spec, 10, 0), Err(Error::Invalid(_))));
    }

    #[test]
    fn sign_bands() {
        assert_eq!(Sign::of(1e-8, 1e-7), Sign::Zero);
        assert_eq!(Sign::of(-1.5e-7, 1e-7), Sign::Inconclusive);
        assert_eq!(Sign::of(2e-7, 1e-7), Sign::Positive);
        assert_eq!(Sign::of(-1e-3, 1e-7), Sign::Negative);
    }
}
