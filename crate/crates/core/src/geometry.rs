//! Points on S³, orthonormal chart frames, and the stereographic chart.
//!
//! The chart centered at `θ` with tangent frame `(e₁, e₂, e₃)` is
//!
//! ```text
//! σ_θ(x) = (2 Σ xᵢ eᵢ + (1 − |x|²) θ) / (1 + |x|²)
//! ```
//!
//! so that `σ_θ(0) = θ`, `σ_θ(x) → −θ` as `|x| → ∞`, and the pulled-back round
//! metric is `4 / (1 + |x|²)²` times the Euclidean one.

use nalgebra::{Matrix3, Matrix4, Vector3, Vector4};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Orthonormality tolerance for frames.
pub const FRAME_TOL: f64 = 1e-12;

/// A unit vector in R⁴, renormalized on construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "[f64; 4]", try_from = "[f64; 4]")]
pub struct SpherePoint(Vector4<f64>);

impl SpherePoint {
    /// Normalizes `v`. Returns `Invalid` for the zero vector or non-finite input.
    pub fn new(v: Vector4<f64>) -> Result<Self> {
        let n = v.norm();
        if !n.is_finite() || n < 1e-300 {
            return Err(Error::Invalid(format!("cannot normalize {:?}", v.as_slice())));
        }
        Ok(SpherePoint(v / n))
    }

    pub fn from_array(a: [f64; 4]) -> Result<Self> {
        Self::new(Vector4::from(a))
    }

    /// Standard basis vector `E_i`, `i` in `1..=4`.
    pub fn basis(i: usize) -> Self {
        assert!((1..=4).contains(&i), "basis index {i} out of range");
        let mut v = Vector4::zeros();
        v[i - 1] = 1.0;
        SpherePoint(v)
    }

    pub fn coords(&self) -> &Vector4<f64> {
        &self.0
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.0[0], self.0[1], self.0[2], self.0[3]]
    }

    pub fn antipode(&self) -> Self {
        SpherePoint(-self.0)
    }

    /// Euclidean distance in R⁴.
    pub fn chordal_distance(&self, other: &SpherePoint) -> f64 {
        (self.0 - other.0).norm()
    }

    /// Image under an orthogonal map of R⁴.
    pub fn transformed(&self, q: &Matrix4<f64>) -> Self {
        SpherePoint::new(q * self.0).expect("orthogonal image of a unit vector")
    }
}

impl From<SpherePoint> for [f64; 4] {
    fn from(p: SpherePoint) -> Self {
        p.to_array()
    }
}

impl TryFrom<[f64; 4]> for SpherePoint {
    type Error = Error;
    fn try_from(a: [f64; 4]) -> Result<Self> {
        SpherePoint::from_array(a)
    }
}

/// A point `θ` together with an orthonormal basis of `T_θ S³`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartFrame {
    base: SpherePoint,
    tangent: [Vector4<f64>; 3],
}

impl ChartFrame {
    /// Builds a frame from explicit tangent vectors; they must already be orthonormal and orthogonal to `base`.
    pub fn from_tangent(base: SpherePoint, tangent: [Vector4<f64>; 3]) -> Result<Self> {
        let frame = ChartFrame { base, tangent };
        let gram = frame.gram();
        if (gram - Matrix4::identity()).abs().max() > 1e-10 {
            return Err(Error::Invalid("tangent vectors are not an orthonormal frame".into()));
        }
        Ok(frame)
    }

    pub fn base(&self) -> &SpherePoint {
        &self.base
    }

    pub fn tangent(&self) -> &[Vector4<f64>; 3] {
        &self.tangent
    }

    /// Gram matrix of `(θ, e₁, e₂, e₃)`.
    pub fn gram(&self) -> Matrix4<f64> {
        let m = self.as_matrix();
        m.transpose() * m
    }

    /// Columns `θ, e₁, e₂, e₃`.
    pub fn as_matrix(&self) -> Matrix4<f64> {
        Matrix4::from_columns(&[*self.base.coords(), self.tangent[0], self.tangent[1], self.tangent[2]])
    }

    /// `Q` with `Q_ij = ⟨eᵢ, e′ⱼ⟩`, so that `e′ⱼ = Σᵢ Q_ij eᵢ` for frames at the same base.
    pub fn change_of_basis(&self, other: &ChartFrame) -> Matrix3<f64> {
        Matrix3::from_fn(|i, j| self.tangent[i].dot(&other.tangent[j]))
    }

    /// Frame transported by an orthogonal map of R⁴.
    pub fn transformed(&self, q: &Matrix4<f64>) -> ChartFrame {
        ChartFrame {
            base: self.base.transformed(q),
            tangent: [q * self.tangent[0], q * self.tangent[1], q * self.tangent[2]],
        }
    }

    /// Ambient image of a chart displacement direction: `Σ uᵢ eᵢ`.
    pub fn push_tangent(&self, u: &Vector3<f64>) -> Vector4<f64> {
        self.tangent[0] * u[0] + self.tangent[1] * u[1] + self.tangent[2] * u[2]
    }
}

/// Deterministic frame at `theta` from a seed: Gram–Schmidt of seed-derived Gaussian vectors against `θ`.
pub fn make_frame(theta: &SpherePoint, seed: u64) -> ChartFrame {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut basis: Vec<Vector4<f64>> = vec![*theta.coords()];
    while basis.len() < 4 {
        let mut v = Vector4::from_fn(|_, _| StandardNormal.sample(&mut rng));
        // two Gram–Schmidt passes
        for _ in 0..2 {
            for b in &basis {
                v -= b * b.dot(&v);
            }
        }
        let n = v.norm();
        if n > 1e-3 {
            basis.push(v / n);
        }
    }
    ChartFrame { base: *theta, tangent: [basis[1], basis[2], basis[3]] }
}

/// Random element of O(4) from a seed (QR of a Gaussian matrix, signs fixed).
pub fn random_orthogonal(seed: u64) -> Matrix4<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = Matrix4::from_fn(|_, _| StandardNormal.sample(&mut rng));
    let qr = a.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..4 {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// `σ_θ(x)`.
pub fn stereo_to_sphere(frame: &ChartFrame, x: &Vector3<f64>) -> SpherePoint {
    let r2 = x.norm_squared();
    if !r2.is_finite() {
        return frame.base.antipode();
    }
    let v = (frame.push_tangent(x) * 2.0 + frame.base.coords() * (1.0 - r2)) / (1.0 + r2);
    if x.iter().all(|c| *c == 0.0) {
        return frame.base;
    }
    SpherePoint::new(v).unwrap_or_else(|_| frame.base.antipode())
}

/// Inverse chart `σ_θ⁻¹(P)`.
pub fn sphere_to_stereo(frame: &ChartFrame, p: &SpherePoint) -> Result<Vector3<f64>> {
    let c = p.coords().dot(frame.base.coords());
    if c < -1.0 + 1e-12 {
        return Err(Error::Antipode { dot: c });
    }
    let t = Vector3::from_fn(|i, _| p.coords().dot(&frame.tangent[i]));
    Ok(t / (1.0 + c))
}

/// Weight `3^{1/4} (1 + |x|²)^{-1/2}` relating functions on S³ to functions on R³.
pub fn conformal_weight(x: &Vector3<f64>) -> f64 {
    3f64.powf(0.25) / (1.0 + x.norm_squared()).sqrt()
}

fn radical_inverse(mut i: usize, base: usize) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// `n` quasi-uniform points on S³: Halton triples (bases 2, 3, 5), skipping the first `offset`,
/// pushed through the volume-preserving quaternion parameterization.
pub fn quasi_uniform_points(n: usize, offset: usize) -> Vec<SpherePoint> {
    use std::f64::consts::TAU;
    (0..n)
        .map(|k| {
            let i = k + offset + 1;
            let (u1, u2, u3) = (radical_inverse(i, 2), radical_inverse(i, 3), radical_inverse(i, 5));
            let (a, b) = ((1.0 - u1).sqrt(), u1.sqrt());
            SpherePoint::new(Vector4::new(
                a * (TAU * u2).sin(),
                a * (TAU * u2).cos(),
                b * (TAU * u3).sin(),
                b * (TAU * u3).cos(),
            ))
            .expect("unit quaternion")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn frame_is_orthonormal() {
        for i in 1..=4 {
            for seed in 0..5 {
                let f = make_frame(&SpherePoint::basis(i), seed);
                assert!((f.gram() - Matrix4::identity()).abs().max() < FRAME_TOL);
            }
        }
    }

    #[test]
    fn frames_differ_by_orthogonal_matrix() {
        let theta = SpherePoint::from_array([0.3, -0.2, 0.9, 0.1]).unwrap();
        let f = make_frame(&theta, 0);
        let g = make_frame(&theta, 1);
        let q = f.change_of_basis(&g);
        assert!((q.transpose() * q - Matrix3::identity()).abs().max() < 1e-12);
        assert!(f != g);
    }

    #[test]
    fn chart_center_and_unit_vector() {
        let f = make_frame(&SpherePoint::basis(4), 0);
        assert_eq!(stereo_to_sphere(&f, &Vector3::zeros()), *f.base());
        let p = stereo_to_sphere(&f, &Vector3::new(1.0, 0.0, 0.0));
        assert_abs_diff_eq!((p.coords() - f.tangent()[0]).norm(), 0.0, epsilon = 1e-15);
        let far = stereo_to_sphere(&f, &Vector3::new(1e6, 0.0, 0.0));
        assert!((far.coords() + f.base().coords()).norm() < 1e-5);
    }

    #[test]
    fn inverse_chart() {
        let f = make_frame(&SpherePoint::basis(2), 3);
        assert_abs_diff_eq!(sphere_to_stereo(&f, f.base()).unwrap().norm(), 0.0);
        let e1 = SpherePoint::new(f.tangent()[0]).unwrap();
        let x = sphere_to_stereo(&f, &e1).unwrap();
        assert_abs_diff_eq!((x - Vector3::new(1.0, 0.0, 0.0)).norm(), 0.0, epsilon = 1e-15);
        assert!(matches!(
            sphere_to_stereo(&f, &f.base().antipode()),
            Err(Error::Antipode { .. })
        ));
    }

    #[test]
    fn weight_values() {
        assert_abs_diff_eq!(conformal_weight(&Vector3::zeros()), 1.3160740129524924, epsilon = 1e-15);
        let w = conformal_weight(&Vector3::new(0.0, 1.0, 0.0));
        assert_abs_diff_eq!(w, 3f64.powf(0.25) / 2f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn quasi_uniform_cover() {
        let pts = quasi_uniform_points(4096, 0);
        // every axis point has a sample nearby
        for i in 1..=4 {
            for p in [SpherePoint::basis(i), SpherePoint::basis(i).antipode()] {
                let d = pts.iter().map(|q| q.chordal_distance(&p)).fold(f64::MAX, f64::min);
                assert!(d < 0.3, "gap {d}");
            }
        }
        let mean: Vector4<f64> = pts.iter().map(|p| *p.coords()).sum::<Vector4<f64>>() / 4096.0;
        assert!(mean.norm() < 0.02);
    }

    #[test]
    fn rejects_bad_tangent() {
        let e = [Vector4::x(), Vector4::z(), Vector4::z()];
        assert!(ChartFrame::from_tangent(SpherePoint::basis(2), e).is_err());
        let e = [Vector4::x(), Vector4::z(), Vector4::w()];
        assert!(ChartFrame::from_tangent(SpherePoint::basis(2), e).is_ok());
    }
}
