//! Curvature functions `K` on S³, the normalized function `k = (K − 6)/6`,
//! perturbations `h`, and exact Taylor jets of their chart pullbacks.
//!
//! A [`CurvatureSpec`] describes `k + s·h` where `h` is the sum of an optional
//! ambient polynomial and a list of compactly supported bumps. Jets are computed
//! by substituting the chart map as truncated power series, so for polynomial
//! data they are exact up to roundoff.

use nalgebra::{Matrix3, Vector3, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{quasi_uniform_points, stereo_to_sphere, ChartFrame, SpherePoint};
use crate::series::Series3;

/// Polynomial in the ambient coordinates `X₁..X₄`, restricted to S³.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AmbientPoly {
    terms: Vec<([u32; 4], f64)>,
}

impl AmbientPoly {
    /// Merges duplicate exponents and drops zero coefficients.
    pub fn new(terms: impl IntoIterator<Item = ([u32; 4], f64)>) -> Self {
        let mut v: Vec<([u32; 4], f64)> = terms.into_iter().collect();
        v.sort_by(|a, b| a.0.cmp(&b.0));
        let mut merged: Vec<([u32; 4], f64)> = Vec::with_capacity(v.len());
        for (e, c) in v {
            match merged.last_mut() {
                Some(last) if last.0 == e => last.1 += c,
                _ => merged.push((e, c)),
            }
        }
        merged.retain(|(_, c)| *c != 0.0);
        AmbientPoly { terms: merged }
    }

    pub fn constant(c: f64) -> Self {
        Self::new([([0; 4], c)])
    }

    /// `Σ cᵢ Xᵢ²`.
    pub fn diagonal_quadratic(c: [f64; 4]) -> Self {
        Self::new((0..4).map(|i| {
            let mut e = [0; 4];
            e[i] = 2;
            (e, c[i])
        }))
    }

    /// `self + c·other`.
    pub fn plus_scaled(&self, other: &AmbientPoly, c: f64) -> AmbientPoly {
        AmbientPoly::new(self.terms.iter().cloned().chain(other.terms.iter().map(|(e, v)| (*e, c * v))))
    }

    pub fn terms(&self) -> &[([u32; 4], f64)] {
        &self.terms
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|(e, _)| e.iter().sum()).max().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, x: &Vector4<f64>) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| c * (0..4).map(|i| x[i].powi(e[i] as i32)).product::<f64>())
            .sum()
    }

    /// Composition with series for the four coordinates.
    pub fn eval_series(&self, coords: &[Series3; 4]) -> Series3 {
        let order = coords[0].order();
        let mut powers: Vec<Vec<Series3>> = coords.iter().map(|c| vec![Series3::constant(order, 1.0), c.clone()]).collect();
        let mut out = Series3::zero(order);
        for (e, c) in &self.terms {
            let mut term = Series3::constant(order, *c);
            for i in 0..4 {
                let p = e[i] as usize;
                if p == 0 {
                    continue;
                }
                while powers[i].len() <= p {
                    let next = powers[i].last().unwrap().mul_trunc(&coords[i]);
                    powers[i].push(next);
                }
                term = term.mul_trunc(&powers[i][p]);
            }
            out += &term;
        }
        out
    }

    /// Same polynomial in rotated coordinates: `(P∘Qᵀ)(X) = P(QᵀX)` expanded back to monomials.
    pub fn rotated(&self, q: &nalgebra::Matrix4<f64>) -> AmbientPoly {
        use std::collections::BTreeMap;
        // (QᵀX)_i = Σ_j Q_ji X_j
        let mut acc: BTreeMap<[u32; 4], f64> = BTreeMap::new();
        for (e, c) in &self.terms {
            let mut poly: BTreeMap<[u32; 4], f64> = BTreeMap::from([([0; 4], *c)]);
            for i in 0..4 {
                for _ in 0..e[i] {
                    let mut next = BTreeMap::new();
                    for (m, v) in &poly {
                        for j in 0..4 {
                            let w = q[(j, i)];
                            if w == 0.0 {
                                continue;
                            }
                            let mut m2 = *m;
                            m2[j] += 1;
                            *next.entry(m2).or_insert(0.0) += v * w;
                        }
                    }
                    poly = next;
                }
            }
            for (m, v) in poly {
                *acc.entry(m).or_insert(0.0) += v;
            }
        }
        AmbientPoly::new(acc.into_iter().filter(|(_, v)| v.abs() > 1e-15))
    }
}

/// Smooth bump `amplitude · exp(1 − 1/(1 − (d/radius)²))` in chordal distance `d` from `center`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BumpFunction {
    pub center: SpherePoint,
    pub radius: f64,
    pub amplitude: f64,
}

impl BumpFunction {
    pub fn new(center: SpherePoint, radius: f64, amplitude: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) || !(amplitude >= 0.0 && amplitude.is_finite()) {
            return Err(Error::Invalid(format!("bad bump radius {radius} / amplitude {amplitude}")));
        }
        Ok(BumpFunction { center, radius, amplitude })
    }

    pub fn value(&self, p: &SpherePoint) -> f64 {
        let u = (p.chordal_distance(&self.center) / self.radius).powi(2);
        if u >= 1.0 {
            0.0
        } else {
            self.amplitude * (1.0 - 1.0 / (1.0 - u)).exp()
        }
    }

    /// Chordal distance from `p` to the boundary of the support, positive outside.
    pub fn distance_outside(&self, p: &SpherePoint) -> f64 {
        p.chordal_distance(&self.center) - self.radius
    }

    /// Taylor series of the pullback at a chart point, given the coordinate series there.
    fn series(&self, coords: &[Series3; 4], at: &SpherePoint) -> Series3 {
        let order = coords[0].order();
        if self.distance_outside(at) >= 0.0 || self.amplitude == 0.0 {
            // all derivatives vanish outside and on the boundary of the support
            return Series3::zero(order);
        }
        // d² = 2 − 2⟨X, c⟩ on the sphere
        let c = self.center.coords();
        let mut dot = Series3::zero(order);
        for i in 0..4 {
            dot += &coords[i].scale(c[i]);
        }
        let mut v = Series3::constant(order, 1.0 - 2.0 / self.radius.powi(2));
        v += &dot.scale(2.0 / self.radius.powi(2));
        let mut arg = v.recip().scale(-1.0);
        arg += &Series3::constant(order, 1.0);
        arg.exp().scale(self.amplitude)
    }
}

/// `k + s·h` with `k = (K − 6)/6` and `h = P + Σ bumps`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureSpec {
    pub base: AmbientPoly,
    pub poly_perturbation: Option<AmbientPoly>,
    pub bump_perturbations: Vec<BumpFunction>,
    pub s: f64,
    positivity_checked: bool,
}

/// Number of sample points for the positivity check.
pub const POSITIVITY_SAMPLES: usize = 10_000;

impl CurvatureSpec {
    pub fn new(base: AmbientPoly) -> Self {
        CurvatureSpec { base, poly_perturbation: None, bump_perturbations: Vec::new(), s: 0.0, positivity_checked: false }
    }

    pub fn with_poly_perturbation(mut self, p: AmbientPoly, s: f64) -> Self {
        self.poly_perturbation = Some(p);
        self.s = s;
        self.positivity_checked = false;
        self
    }

    pub fn with_bumps(mut self, bumps: Vec<BumpFunction>, s: f64) -> Self {
        self.bump_perturbations = bumps;
        self.s = s;
        self.positivity_checked = false;
        self
    }

    pub fn with_s(mut self, s: f64) -> Self {
        self.s = s;
        self.positivity_checked = false;
        self
    }

    pub fn positivity_checked(&self) -> bool {
        self.positivity_checked
    }

    pub fn has_perturbation(&self) -> bool {
        self.s != 0.0 && (self.poly_perturbation.as_ref().is_some_and(|p| !p.is_zero()) || !self.bump_perturbations.is_empty())
    }

    /// The same spec without bumps; polynomial data (including the scaled polynomial perturbation) is kept.
    pub fn without_bumps(&self) -> CurvatureSpec {
        CurvatureSpec { bump_perturbations: Vec::new(), ..self.clone() }
    }

    /// Checks `1 + k + s·h > 0` on quasi-uniform samples; then `1 + t(k + s·h) > 0` for all `t ∈ [0, 1]`.
    pub fn checked(mut self) -> Result<Self> {
        let pts = quasi_uniform_points(POSITIVITY_SAMPLES, 0);
        let extra = (1..=4).flat_map(|i| [SpherePoint::basis(i), SpherePoint::basis(i).antipode()]);
        for p in pts.into_iter().chain(extra) {
            let v = 1.0 + self.k_value(&p, true);
            if !(v > 0.0) {
                return Err(Error::NotPositive { location: p.to_array(), value: v });
            }
        }
        self.positivity_checked = true;
        Ok(self)
    }

    /// The polynomial `K + 6 s P`: the spec with its polynomial perturbation folded into the base.
    pub fn folded_polynomial(&self) -> AmbientPoly {
        match &self.poly_perturbation {
            Some(p) if self.s != 0.0 => self.base.plus_scaled(p, 6.0 * self.s),
            _ => self.base.clone(),
        }
    }

    /// `K(P)`, plus `6 s h(P)` when `include_perturbation`.
    pub fn evaluate(&self, p: &SpherePoint, include_perturbation: bool) -> f64 {
        6.0 + 6.0 * self.k_value(p, include_perturbation)
    }

    /// `k(P)`, plus `s h(P)` when `include_perturbation`.
    pub fn k_value(&self, p: &SpherePoint, include_perturbation: bool) -> f64 {
        let mut v = (self.base.eval(p.coords()) - 6.0) / 6.0;
        if include_perturbation {
            v += self.s * self.h_value(p);
        }
        v
    }

    pub fn h_value(&self, p: &SpherePoint) -> f64 {
        let mut v = self.poly_perturbation.as_ref().map_or(0.0, |q| q.eval(p.coords()));
        for b in &self.bump_perturbations {
            v += b.value(p);
        }
        v
    }

    /// `k_θ(x)` evaluated directly through the chart.
    pub fn pullback_value(&self, frame: &ChartFrame, x: &Vector3<f64>, include_perturbation: bool) -> f64 {
        self.k_value(&stereo_to_sphere(frame, x), include_perturbation)
    }

    /// Taylor series of order `order` of `x ↦ k_θ(y + x)`.
    pub fn pullback_series(&self, frame: &ChartFrame, y: &Vector3<f64>, order: usize, include_perturbation: bool) -> Series3 {
        let coords = chart_coordinate_series(frame, y, order);
        let mut k = self.base.eval_series(&coords);
        k *= 1.0 / 6.0;
        k -= &Series3::constant(order, 1.0);
        if include_perturbation && self.s != 0.0 {
            k += &self.h_series_from(&coords, &stereo_to_sphere(frame, y)).scale(self.s);
        }
        k
    }

    /// Taylor series of `x ↦ h_θ(y + x)` (unscaled perturbation).
    pub fn h_series(&self, frame: &ChartFrame, y: &Vector3<f64>, order: usize) -> Series3 {
        let coords = chart_coordinate_series(frame, y, order);
        self.h_series_from(&coords, &stereo_to_sphere(frame, y))
    }

    fn h_series_from(&self, coords: &[Series3; 4], at: &SpherePoint) -> Series3 {
        let order = coords[0].order();
        let mut h = match &self.poly_perturbation {
            Some(p) => p.eval_series(coords),
            None => Series3::zero(order),
        };
        for b in &self.bump_perturbations {
            h += &b.series(coords, at);
        }
        h
    }

    /// Rotated spec `K∘Qᵀ` (bump centers move to `Q·c`).
    pub fn rotated(&self, q: &nalgebra::Matrix4<f64>) -> CurvatureSpec {
        CurvatureSpec {
            base: self.base.rotated(q),
            poly_perturbation: self.poly_perturbation.as_ref().map(|p| p.rotated(q)),
            bump_perturbations: self
                .bump_perturbations
                .iter()
                .map(|b| BumpFunction { center: b.center.transformed(q), ..b.clone() })
                .collect(),
            s: self.s,
            positivity_checked: false,
        }
    }
}

/// Series of the ambient coordinates `σ_θ(y + x)ᵢ`.
pub fn chart_coordinate_series(frame: &ChartFrame, y: &Vector3<f64>, order: usize) -> [Series3; 4] {
    let z: [Series3; 3] = std::array::from_fn(|j| Series3::variable(order, j, y[j]));
    let mut r2 = Series3::zero(order);
    for zj in &z {
        r2 += &zj.mul_trunc(zj);
    }
    let mut denom = r2.clone();
    denom += &Series3::constant(order, 1.0);
    let inv = denom.recip();
    let theta = frame.base().coords();
    let e = frame.tangent();
    std::array::from_fn(|i| {
        let mut n = Series3::constant(order, theta[i]);
        n -= &r2.scale(theta[i]);
        for j in 0..3 {
            n += &z[j].scale(2.0 * e[j][i]);
        }
        n.mul_trunc(&inv)
    })
}

/// Order-4 Taylor jet of a chart pullback at the chart point `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct TaylorJet4 {
    pub base_chart_point: Vector3<f64>,
    series: Series3,
}

impl TaylorJet4 {
    pub fn from_series(base_chart_point: Vector3<f64>, series: Series3) -> Self {
        TaylorJet4 { base_chart_point, series: series.with_order(4) }
    }

    /// The 35 coefficients `c_a` of `x^a`, `|a| ≤ 4`, in displacement from `y`.
    pub fn coeffs(&self) -> &[f64] {
        self.series.coeffs()
    }

    pub fn series(&self) -> &Series3 {
        &self.series
    }

    /// Degree-`m` Taylor polynomial evaluated at displacement `dx`.
    pub fn eval_taylor(&self, m: usize, dx: &Vector3<f64>) -> f64 {
        self.series.truncated(m).eval(dx)
    }

    pub fn quantities(&self) -> JetQuantities {
        jet_quantities(self)
    }
}

/// Exact order-4 jet of `k_θ` (or `k_θ + s h_θ`) at `y`.
pub fn pullback_jet(spec: &CurvatureSpec, frame: &ChartFrame, y: &Vector3<f64>, include_perturbation: bool) -> TaylorJet4 {
    TaylorJet4 { base_chart_point: *y, series: spec.pullback_series(frame, y, 4, include_perturbation) }
}

/// Derivative data of a jet at its base point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JetQuantities {
    pub value: f64,
    pub gradient: Vector3<f64>,
    pub hessian: Matrix3<f64>,
    pub laplacian: f64,
    pub grad_laplacian: Vector3<f64>,
    pub bilaplacian: f64,
}

fn unit(i: usize, k: usize) -> [usize; 3] {
    let mut e = [0; 3];
    e[i] = k;
    e
}

fn add(a: [usize; 3], b: [usize; 3]) -> [usize; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

/// Derivatives from a series: `∂^a f = a! c_a`.
pub fn series_quantities(s: &Series3) -> JetQuantities {
    let gradient = Vector3::from_fn(|i, _| s.coeff(unit(i, 1)));
    let hessian = Matrix3::from_fn(|i, j| if i == j { 2.0 * s.coeff(unit(i, 2)) } else { s.coeff(add(unit(i, 1), unit(j, 1))) });
    let laplacian = hessian.trace();
    let grad_laplacian = Vector3::from_fn(|i, _| {
        (0..3)
            .map(|j| if j == i { 6.0 * s.coeff(unit(i, 3)) } else { 2.0 * s.coeff(add(unit(i, 1), unit(j, 2))) })
            .sum()
    });
    let mut bilaplacian = 0.0;
    for i in 0..3 {
        bilaplacian += 24.0 * s.coeff(unit(i, 4));
        for j in 0..3 {
            if j != i {
                bilaplacian += 4.0 * s.coeff(add(unit(i, 2), unit(j, 2)));
            }
        }
    }
    JetQuantities { value: s.constant_term(), gradient, hessian, laplacian, grad_laplacian, bilaplacian }
}

pub fn jet_quantities(jet: &TaylorJet4) -> JetQuantities {
    series_quantities(&jet.series)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::make_frame;
    use approx::assert_abs_diff_eq;

    fn k2() -> CurvatureSpec {
        CurvatureSpec::new(AmbientPoly::diagonal_quadratic([3.0, 6.0, 7.0, 8.0]))
    }

    fn frame_e2() -> ChartFrame {
        ChartFrame::from_tangent(SpherePoint::basis(2), [Vector4::x(), Vector4::z(), Vector4::w()]).unwrap()
    }

    #[test]
    fn poly_merges_and_prunes() {
        let p = AmbientPoly::new([([1, 0, 0, 0], 1.0), ([1, 0, 0, 0], -1.0), ([0, 2, 0, 0], 2.0), ([0, 2, 0, 0], 1.0)]);
        assert_eq!(p.terms(), &[([0, 2, 0, 0], 3.0)]);
        assert_eq!(p.degree(), 2);
    }

    #[test]
    fn evaluate_examples() {
        let k1 = CurvatureSpec::new(AmbientPoly::diagonal_quadratic([2.0, 6.0, 7.0, 8.0]));
        assert_abs_diff_eq!(k1.evaluate(&SpherePoint::basis(4), false), 8.0, epsilon = 1e-14);
        assert_abs_diff_eq!(k2().evaluate(&SpherePoint::basis(2), false), 6.0, epsilon = 1e-14);
        assert_abs_diff_eq!(k2().k_value(&SpherePoint::basis(2), false), 0.0, epsilon = 1e-15);
        let b = BumpFunction::new(SpherePoint::basis(1), 0.5, 1.0).unwrap();
        assert_eq!(b.value(&SpherePoint::basis(2)), 0.0);
        assert_abs_diff_eq!(b.value(&SpherePoint::basis(1)), 1.0);
    }

    #[test]
    fn constant_six_has_zero_jet() {
        let spec = CurvatureSpec::new(AmbientPoly::constant(6.0));
        let f = make_frame(&SpherePoint::from_array([0.1, 0.2, 0.3, 0.9]).unwrap(), 4);
        let jet = pullback_jet(&spec, &f, &Vector3::new(0.3, -0.1, 0.2), true);
        assert!(jet.coeffs().iter().all(|c| c.abs() < 1e-15));
    }

    #[test]
    fn k2_hessian_at_e2() {
        let q = pullback_jet(&k2(), &frame_e2(), &Vector3::zeros(), false).quantities();
        let expect = Matrix3::from_diagonal(&Vector3::new(-4.0, 4.0 / 3.0, 8.0 / 3.0));
        assert!((q.hessian - expect).abs().max() < 1e-13);
        assert_abs_diff_eq!(q.laplacian, 0.0, epsilon = 1e-13);
        assert!(q.gradient.norm() < 1e-15);
        assert!(q.grad_laplacian.norm() < 1e-13);
        assert_abs_diff_eq!(q.bilaplacian, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn quantities_of_radial_polys() {
        let r2 = Series3::from_terms(4, &[([2, 0, 0], 1.0), ([0, 2, 0], 1.0), ([0, 0, 2], 1.0)]);
        let q = series_quantities(&r2);
        assert_abs_diff_eq!(q.laplacian, 6.0);
        assert_abs_diff_eq!(q.bilaplacian, 0.0);
        let q4 = series_quantities(&r2.mul_trunc(&r2));
        assert_abs_diff_eq!(q4.bilaplacian, 120.0);
        assert_abs_diff_eq!(q4.laplacian, 0.0);
    }

    #[test]
    fn series_matches_direct_evaluation() {
        let spec = CurvatureSpec::new(AmbientPoly::new([([1, 1, 0, 0], 2.0), ([0, 0, 3, 0], -1.5), ([0, 1, 0, 2], 0.7)]));
        let f = make_frame(&SpherePoint::from_array([0.4, -0.3, 0.5, 0.7]).unwrap(), 11);
        let y = Vector3::new(0.2, -0.4, 0.1);
        let s = spec.pullback_series(&f, &y, 20, false);
        let dx = Vector3::new(0.03, 0.05, -0.04);
        assert_abs_diff_eq!(s.eval(&dx), spec.pullback_value(&f, &(y + dx), false), epsilon = 1e-14);
    }

    #[test]
    fn bump_series_matches_direct_evaluation() {
        let b = BumpFunction::new(SpherePoint::from_array([0.5, 0.5, 0.5, 0.5]).unwrap(), 0.8, 1.3).unwrap();
        let spec = CurvatureSpec::new(AmbientPoly::constant(6.0)).with_bumps(vec![b], 1.0);
        let f = make_frame(&SpherePoint::basis(2), 0);
        // a chart point inside the support
        let y = crate::geometry::sphere_to_stereo(&f, &SpherePoint::from_array([0.45, 0.55, 0.5, 0.5]).unwrap()).unwrap();
        let s = spec.pullback_series(&f, &y, 16, true);
        let dx = Vector3::new(0.01, -0.008, 0.006);
        assert_abs_diff_eq!(s.eval(&dx), spec.pullback_value(&f, &(y + dx), true), epsilon = 1e-10);
        assert!(s.constant_term() > 0.0);
    }
}
