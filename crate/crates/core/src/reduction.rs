//! Finite-dimensional reduction near a critical point with vanishing Laplacian.
//!
//! Everything here is leading order: `α` is replaced by the explicit sum
//! `α₁ + α₂ + α₃ + α₄`, whose remainder is `O(μ^{4+1/4})` plus gradient terms.
//! The full corrector `w` is not computed.
//!
//! Conventions: the reduced problem is `k + s·h` where `k` is polynomial (any
//! polynomial perturbation of the input already folded in) and `h` is the sum of
//! the bumps; `s` is the parameter along blow-up curves.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curvature::{series_quantities, BumpFunction, CurvatureSpec, JetQuantities};
use crate::error::{Error, Result};
use crate::geometry::{make_frame, ChartFrame, SpherePoint};
use crate::invariants::LocalInvariants;
use crate::pv::{hessian_boundary_integral, pv_batch, PvOptions, PvRequest, Source};

/// Prefactors of the reduction formulas.
pub mod constants {
    /// `π / (3^{1/4} √5)`, multiplies `t₀` in `α₁` and `α₂`.
    pub const ALPHA12: f64 = 1.067540983547148;
    /// `π / (2 · 3^{1/4} √5)`, `α₃` y-components.
    pub const ALPHA3_Y: f64 = 0.5337704917735738;
    /// `8 · 3^{3/4} / (π √5)`, `α₄` y-components.
    pub const ALPHA4_Y: f64 = 2.595948384952858;
    /// `4 · 3^{3/4} / (π √5)`, `α₃` μ-component.
    pub const ALPHA3_0: f64 = 1.297974192476429;
    /// `3^{3/4} π √5 / 30`, bilaplacian part of the `α₄` μ-component.
    pub const ALPHA4_0: f64 = 0.5337704917735738;
    /// `3^{3/4} √5 / 16`, boundary-integral part of the `α₄` μ-component.
    pub const ALPHA4_B: f64 = 0.3185707959088355;
    /// `3^{1/4} √5 / π`, normalization of `α̂`.
    pub const ALPHA_HAT: f64 = 0.9367321867843169;
    /// `π √5 / (4 · 3^{3/4})`, normalization of `γ`.
    pub const GAMMA: f64 = 0.7704313427773794;
    /// `π² / 24`.
    pub const SLOPE: f64 = 0.4112335167120566;
}

use constants as c;

/// Largest μ accepted by the β fixed point (inclusive).
pub const MU_1: f64 = 0.05;
const BETA_STEP_TOL: f64 = 1e-12;
const BETA_MAX_ITER: usize = 100;
const NEWTON_S_TOL: f64 = 1e-12;

/// `z_{μ,y}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bubble {
    pub mu: f64,
    pub y: [f64; 3],
}

impl Bubble {
    pub fn new(mu: f64, y: Vector3<f64>) -> Result<Bubble> {
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::Invalid(format!("bubble scale mu = {mu} must be positive")));
        }
        Ok(Bubble { mu, y: [y[0], y[1], y[2]] })
    }

    pub fn center(&self) -> Vector3<f64> {
        Vector3::from(self.y)
    }
}

/// `μ^{−1/2} 3^{1/4} (1 + |(x − y)/μ|²)^{−1/2}`.
pub fn bubble_eval(b: &Bubble, x: &Vector3<f64>) -> f64 {
    let r2 = ((x - b.center()) / b.mu).norm_squared();
    3f64.powf(0.25) / b.mu.sqrt() / (1.0 + r2).sqrt()
}

/// The four explicit terms of `α`; index 0 is the μ-direction, 1..3 the y-directions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaTerms {
    pub alpha1: [f64; 4],
    pub alpha2: [f64; 4],
    pub alpha3: [f64; 4],
    pub alpha4: [f64; 4],
    /// Quadrature error of each component of the sum.
    pub error: [f64; 4],
}

impl AlphaTerms {
    pub fn sum(&self) -> [f64; 4] {
        std::array::from_fn(|i| self.alpha1[i] + self.alpha2[i] + self.alpha3[i] + self.alpha4[i])
    }
}

/// `α₁..α₄` for `spec` (which carries `s`) at the bubble `(μ, y)`.
pub fn alpha_terms(spec: &CurvatureSpec, t0: f64, bubble: &Bubble, frame: &ChartFrame, opts: &PvOptions) -> Result<AlphaTerms> {
    let y = bubble.center();
    let mu = bubble.mu;
    let q = series_quantities(&spec.pullback_series(frame, &y, 4, true));
    let cy = 1.0 + t0 * q.value;
    if !(cy > 0.0) {
        return Err(Error::NotPositive { location: crate::geometry::stereo_to_sphere(frame, &y).to_array(), value: cy });
    }
    let p = cy.powf(-1.25);
    let requests = [PvRequest::A0, PvRequest::odd_moment(1), PvRequest::odd_moment(2), PvRequest::odd_moment(3)];
    let pv = pv_batch(spec, frame, &y, &requests, Source::Full, opts)?;
    let (mu2, mu3, mu4) = (mu * mu, mu.powi(3), mu.powi(4));

    let mut a = AlphaTerms { alpha1: [0.0; 4], alpha2: [0.0; 4], alpha3: [0.0; 4], alpha4: [0.0; 4], error: [0.0; 4] };
    a.alpha2[0] = -mu2 * p * t0 * c::ALPHA12 * q.laplacian;
    a.alpha3[0] = -mu3 * p * t0 * c::ALPHA3_0 * pv[0].value;
    a.alpha4[0] = mu4 * p * t0 * c::ALPHA4_0 * q.bilaplacian
        - t0 * t0 * mu4 * c::ALPHA4_B * cy.powf(-2.25) * hessian_boundary_integral(&q.hessian);
    a.error[0] = mu3 * p * t0.abs() * c::ALPHA3_0 * pv[0].error_estimate;
    for i in 0..3 {
        a.alpha1[i + 1] = -mu * p * t0 * c::ALPHA12 * q.gradient[i];
        a.alpha3[i + 1] = -mu3 * p * t0 * c::ALPHA3_Y * q.grad_laplacian[i];
        a.alpha4[i + 1] = -mu4 * p * t0 * c::ALPHA4_Y * pv[i + 1].value;
        a.error[i + 1] = mu4 * p * t0.abs() * c::ALPHA4_Y * pv[i + 1].error_estimate;
    }
    Ok(a)
}

/// `a₁ + t₀a₂` recovered from the μ-components at a critical point with `Δ = 0` and `∇Δ = 0`:
/// `−(24/π²)(1 + t₀k(θ)) · (−1/(t₀μ⁴))(1 + t₀k(θ))^{5/4} C_γ (α₄ − α₂)₀`.
pub fn mu_component_combination(a: &AlphaTerms, t0: f64, mu: f64, k_theta: f64) -> f64 {
    let ck = 1.0 + t0 * k_theta;
    let g = -ck.powf(1.25) * c::GAMMA * (a.alpha4[0] - a.alpha2[0]) / (t0 * mu.powi(4));
    -g * ck / c::SLOPE
}

/// The reduced problem `k + s·h` at a critical point `θ` of `k` with `Δk_θ(0) = 0`.
#[derive(Debug, Clone)]
pub struct ReducedProblem {
    k: CurvatureSpec,
    bumps: Vec<BumpFunction>,
    pub t0: f64,
    pub frame: ChartFrame,
    pub pv: PvOptions,
    jet: JetQuantities,
    hessian_inv: Matrix3<f64>,
}

impl ReducedProblem {
    /// `k` is `spec` with its polynomial perturbation folded in; `h` is the bumps of `spec`.
    pub fn new(spec: &CurvatureSpec, theta: &SpherePoint, t0: f64, frame_seed: u64, pv: PvOptions) -> Result<ReducedProblem> {
        if !(t0 > 0.0 && t0 <= 1.0) {
            return Err(Error::Invalid(format!("t0 = {t0} outside (0, 1]")));
        }
        let k = CurvatureSpec::new(spec.folded_polynomial());
        let frame = make_frame(theta, frame_seed);
        for b in &spec.bump_perturbations {
            if b.amplitude != 0.0 && b.distance_outside(theta) <= 0.0 {
                return Err(Error::Invalid(format!("bump support contains the critical point {:?}", theta.to_array())));
            }
        }
        let jet = series_quantities(&k.pullback_series(&frame, &Vector3::zeros(), 4, false));
        let scale = jet.hessian.abs().max().max(1.0);
        if jet.gradient.norm() > 1e-8 * scale {
            return Err(Error::Invalid(format!("{:?} is not a critical point (|grad| = {:e})", theta.to_array(), jet.gradient.norm())));
        }
        if jet.laplacian.abs() > 1e-6 * scale {
            return Err(Error::Invalid(format!("Laplacian {:e} at {:?} does not vanish", jet.laplacian, theta.to_array())));
        }
        let hessian_inv = jet.hessian.try_inverse().ok_or(Error::SingularHessian(theta.to_array()))?;
        Ok(ReducedProblem { k, bumps: spec.bump_perturbations.clone(), t0, frame, pv, jet, hessian_inv })
    }

    pub fn theta(&self) -> &SpherePoint {
        self.frame.base()
    }

    /// `k(θ)`.
    pub fn k_theta(&self) -> f64 {
        self.jet.value
    }

    /// `k + s·h` as a spec.
    pub fn spec_at(&self, s: f64) -> CurvatureSpec {
        self.k.clone().with_bumps(self.bumps.clone(), s)
    }

    fn c_theta(&self) -> f64 {
        1.0 + self.t0 * self.jet.value
    }

    /// `β(s, μ)` by Banach iteration of `F(y) = y + H⁻¹ α̂(y)`; also returns `α` at the fixed point.
    pub fn beta_curve(&self, s: f64, mu: f64) -> Result<BetaPoint> {
        if !(mu > 0.0 && mu <= MU_1) {
            return Err(Error::NoContraction { mu });
        }
        let spec = self.spec_at(s);
        let scale = c::ALPHA_HAT / (self.t0 * mu) * self.c_theta().powf(1.25);
        let mut y = Vector3::zeros();
        let mut prev_step = f64::INFINITY;
        for it in 1..=BETA_MAX_ITER {
            let alpha = alpha_terms(&spec, self.t0, &Bubble::new(mu, y)?, &self.frame, &self.pv)?;
            let sum = alpha.sum();
            let hat = Vector3::new(sum[1], sum[2], sum[3]) * scale;
            let next = y + self.hessian_inv * hat;
            let step = (next - y).norm();
            if !next.iter().all(|v| v.is_finite()) || next.norm() > MU_1 {
                return Err(Error::NoContraction { mu });
            }
            let converged = step < BETA_STEP_TOL
                // quadrature noise floor: steps stopped shrinking while already tiny
                || (step < 1e-10 && step >= prev_step);
            if converged {
                return Ok(BetaPoint { beta: next, alpha, iterations: it });
            }
            if it > 3 && step > prev_step {
                return Err(Error::NoContraction { mu });
            }
            y = next;
            prev_step = step;
        }
        Err(Error::NoContraction { mu })
    }

    /// `γ(s, μ) = −(1/(t₀μ³)) (1 + t₀k(θ))^{5/4} C_γ α(s, μ, β)₀`.
    pub fn gamma(&self, s: f64, mu: f64) -> Result<GammaPoint> {
        let b = self.beta_curve(s, mu)?;
        let gamma = -self.c_theta().powf(1.25) * c::GAMMA * b.alpha.sum()[0] / (self.t0 * mu.powi(3));
        let error = self.c_theta().powf(1.25) * c::GAMMA * b.alpha.error[0] / (self.t0 * mu.powi(3));
        Ok(GammaPoint { gamma, error, beta: b.beta })
    }

    /// `∫ h_θ(x + y) |x|⁻⁶ dx` (unscaled bumps).
    pub fn h_integral(&self, y: &Vector3<f64>) -> Result<f64> {
        if self.bumps.is_empty() {
            return Ok(0.0);
        }
        Ok(pv_batch(&self.spec_at(1.0), &self.frame, y, &[PvRequest::plain(6)], Source::Perturbation, &self.pv)?[0].value)
    }

    /// `a₁(θ) + t₀ a₂(θ)`.
    pub fn a1_t0a2(&self) -> Result<f64> {
        let a1 = crate::invariants::a1_from_jet(&self.jet)?;
        let a2 = crate::invariants::a2_from_jet(&self.jet, a1);
        Ok(a1 + self.t0 * a2)
    }

    /// Closed-form `∂γ/∂s` and `∂γ/∂μ` at `μ → 0`, and central differences of `γ` at `(s, μ)`.
    pub fn gamma_derivatives(&self, s: f64, mu: f64) -> Result<GammaDerivatives> {
        let ds_closed = self.h_integral(&Vector3::zeros())?;
        let dmu_closed = -c::SLOPE * self.a1_t0a2()? / self.c_theta();
        let hm = 0.1 * mu;
        let dmu_fd = (self.gamma(s, mu + hm)?.gamma - self.gamma(s, mu - hm)?.gamma) / (2.0 * hm);
        let hs = 1e-3_f64.max(1e-2 * s.abs());
        let ds_fd = (self.gamma(s + hs, mu)?.gamma - self.gamma(s - hs, mu)?.gamma) / (2.0 * hs);
        Ok(GammaDerivatives { ds_closed, dmu_closed, ds_fd, dmu_fd })
    }

    /// Root of `γ(·, μ)` by Newton in `s`; `γ` is affine in `s` for fixed `β`.
    pub fn solve_s(&self, mu: f64, s_start: f64) -> Result<CurveSample> {
        let mut s = s_start;
        for _ in 0..30 {
            let g = self.gamma(s, mu)?;
            let at = crate::geometry::stereo_to_sphere(&self.frame, &g.beta);
            let weight = (self.c_theta() / (1.0 + self.t0 * self.spec_at(s).k_value(&at, true))).powf(1.25);
            let slope = weight * self.h_integral(&g.beta)?;
            if slope == 0.0 {
                return Err(Error::Invalid("perturbation integral vanishes; gamma does not depend on s".into()));
            }
            let ds = -g.gamma / slope;
            if ds.abs() < NEWTON_S_TOL * s.abs().max(1.0) {
                return Ok(CurveSample { mu, s, y: [g.beta[0], g.beta[1], g.beta[2]] });
            }
            s += ds;
        }
        Err(Error::NoContraction { mu })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaPoint {
    pub beta: Vector3<f64>,
    pub alpha: AlphaTerms,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaPoint {
    pub gamma: f64,
    pub error: f64,
    pub beta: Vector3<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaDerivatives {
    pub ds_closed: f64,
    pub dmu_closed: f64,
    pub ds_fd: f64,
    pub dmu_fd: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveSample {
    pub mu: f64,
    pub s: f64,
    /// `β(s, μ)` in the chart frame.
    pub y: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowUpCurve {
    pub theta_index: usize,
    pub theta: SpherePoint,
    /// `ds/dμ` at `μ = 0`.
    pub slope: f64,
    pub samples: Vec<CurveSample>,
    /// Morse index of the blow-up solutions, `4 − ind(k, θ)`.
    pub morse_index: usize,
}

/// Geometric grid from `10⁻³` to `5·10⁻²`.
pub fn default_mu_grid() -> Vec<f64> {
    let (lo, hi, n) = (1e-3f64, 5e-2f64, 20);
    (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
}

#[derive(Debug, Clone)]
pub struct BlowUpOptions {
    pub t0: f64,
    pub mu_grid: Vec<f64>,
    pub frame_seed: u64,
    pub pv: PvOptions,
}

impl BlowUpOptions {
    pub fn new(t0: f64) -> Self {
        BlowUpOptions { t0, mu_grid: default_mu_grid(), frame_seed: 0, pv: PvOptions::default() }
    }
}

/// `k` of the reduced problem: the polynomial part of `spec` with its perturbation folded in.
pub fn reduced_base(spec: &CurvatureSpec) -> CurvatureSpec {
    CurvatureSpec::new(spec.folded_polynomial())
}

/// Blow-up curves `s^θ(μ)` over `M_*(t₀)`; `table` holds the invariants of [`reduced_base`].
pub fn blowup_curves(spec: &CurvatureSpec, table: &[LocalInvariants], opts: &BlowUpOptions) -> Result<Vec<BlowUpCurve>> {
    let mut curves = Vec::new();
    for (theta_index, inv) in table.iter().enumerate() {
        if !inv.in_m_star(opts.t0) {
            continue;
        }
        let red = ReducedProblem::new(spec, &inv.location, opts.t0, opts.frame_seed, opts.pv)?;
        let h0 = red.h_integral(&Vector3::zeros())?;
        if !(h0 > 0.0) {
            return Err(Error::Invalid(format!("perturbation integral {h0:e} at {:?} is not positive", inv.location.to_array())));
        }
        let slope = c::SLOPE / h0 * red.a1_t0a2()? / red.c_theta();
        let samples = opts
            .mu_grid
            .par_iter()
            .map(|&mu| red.solve_s(mu, slope * mu))
            .collect::<Result<Vec<_>>>()?;
        curves.push(BlowUpCurve { theta_index, theta: inv.location, slope, samples, morse_index: 4 - inv.morse_index });
    }
    if curves.is_empty() {
        return Err(Error::EmptyMStar);
    }
    Ok(curves)
}

/// CSV with columns `theta_index, mu, s, y1, y2, y3, slope, morse_index`.
pub fn write_curves_csv(curves: &[BlowUpCurve], mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "theta_index,mu,s,y1,y2,y3,slope,morse_index")?;
    for c in curves {
        for p in &c.samples {
            writeln!(out, "{},{:e},{:e},{:e},{:e},{:e},{:e},{}", c.theta_index, p.mu, p.s, p.y[0], p.y[1], p.y[2], c.slope, c.morse_index)?;
        }
    }
    Ok(())
}

/// `λ_{i,j} = 1 − 15/((4 + 2(i + j − 1))² − 1)` for `i + j ≥ 2`.
pub fn spectrum(i: usize, j: usize) -> Result<f64> {
    let n = i + j;
    if n < 2 {
        return Err(Error::Domain(n));
    }
    let d = (4 + 2 * (n - 1)) as f64;
    Ok(1.0 - 15.0 / (d * d - 1.0))
}

/// The unique negative eigenvalue of the linearization.
pub const NEGATIVE_EIGENVALUE: f64 = -4.0;
pub const NEGATIVE_EIGENVALUE_MULTIPLICITY: usize = 1;
pub const KERNEL_DIMENSION: usize = 4;

/// `π²/24`, evaluated rather than pinned.
pub fn slope_constant() -> f64 {
    PI * PI / 24.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvature::AmbientPoly;
    use approx::assert_abs_diff_eq;

    fn k2() -> CurvatureSpec {
        CurvatureSpec::new(AmbientPoly::diagonal_quadratic([3.0, 6.0, 7.0, 8.0]))
    }

    #[test]
    fn constants_pinned() {
        let s5 = 5f64.sqrt();
        let q = 3f64.powf(0.25);
        let table = [
            (c::ALPHA12, PI / (q * s5)),
            (c::ALPHA3_Y, PI / (2.0 * q * s5)),
            (c::ALPHA4_Y, 8.0 * q.powi(3) / (PI * s5)),
            (c::ALPHA3_0, 4.0 * q.powi(3) / (PI * s5)),
            (c::ALPHA4_0, q.powi(3) * PI * s5 / 30.0),
            (c::ALPHA4_B, q.powi(3) * s5 / 16.0),
            (c::ALPHA_HAT, q * s5 / PI),
            (c::GAMMA, PI * s5 / (4.0 * q.powi(3))),
            (c::SLOPE, slope_constant()),
        ];
        for (pinned, formula) in table {
            assert_abs_diff_eq!(pinned, formula, epsilon = 1e-12);
        }
    }

    #[test]
    fn bubble_values() {
        let b = Bubble::new(1.0, Vector3::zeros()).unwrap();
        assert_abs_diff_eq!(bubble_eval(&b, &Vector3::zeros()), 3f64.powf(0.25), epsilon = 1e-15);
        assert_abs_diff_eq!(bubble_eval(&b, &Vector3::new(0.0, 1.0, 0.0)), 3f64.powf(0.25) / 2f64.sqrt(), epsilon = 1e-15);
        assert!(Bubble::new(0.0, Vector3::zeros()).is_err());
    }

    #[test]
    fn spectrum_values() {
        assert_abs_diff_eq!(spectrum(1, 1).unwrap(), 4.0 / 7.0, epsilon = 1e-15);
        assert!(matches!(spectrum(1, 0), Err(Error::Domain(1))));
    }

    #[test]
    fn k2_alpha_structure() {
        let spec = k2();
        let frame = make_frame(&SpherePoint::basis(2), 0);
        let mu = 0.01;
        let a = alpha_terms(&spec, 1.0, &Bubble::new(mu, Vector3::zeros()).unwrap(), &frame, &PvOptions::default()).unwrap();
        assert!(a.alpha1.iter().all(|v| v.abs() < 1e-14));
        assert!(a.alpha2.iter().all(|v| v.abs() < 1e-14));
        assert!(a.alpha3[1..].iter().all(|v| v.abs() < 1e-14));
        let comb = mu_component_combination(&a, 1.0, mu, 0.0);
        assert!((comb + 224.0 / 9.0).abs() < 0.01 * 224.0 / 9.0, "{comb}");
    }

    #[test]
    fn k2_beta_and_gamma() {
        let red = ReducedProblem::new(&k2(), &SpherePoint::basis(2), 1.0, 0, PvOptions::default()).unwrap();
        for mu in [1e-3, 1e-2] {
            let b = red.beta_curve(0.0, mu).unwrap();
            assert!(b.beta.norm() < 10.0 * mu.powi(3));
        }
        let d = red.gamma_derivatives(0.0, 0.005).unwrap();
        assert!((d.dmu_fd - d.dmu_closed).abs() < 0.05 * d.dmu_closed.abs(), "{d:?}");
        assert!(d.dmu_closed > 0.0);
    }

    #[test]
    fn beta_leading_term() {
        // 0.01·X₁X₃² is cubic in the chart at E₂, so it changes ∇Δk but not ∇k or Δk
        let base = AmbientPoly::diagonal_quadratic([3.0, 6.0, 7.0, 8.0]).plus_scaled(&AmbientPoly::new([([1, 0, 2, 0], 1.0)]), 0.06);
        let spec = CurvatureSpec::new(base);
        let red = ReducedProblem::new(&spec, &SpherePoint::basis(2), 1.0, 0, PvOptions::default()).unwrap();
        let lead = -0.5 * red.hessian_inv * red.jet.grad_laplacian;
        assert!(lead.norm() > 1e-4);
        let err: Vec<f64> = [4e-3, 2e-3, 1e-3]
            .iter()
            .map(|&mu| (red.beta_curve(0.0, mu).unwrap().beta / (mu * mu) - lead).norm())
            .collect();
        // O(μ) convergence of β/μ²
        assert!(err[2] < err[1] && err[1] < err[0], "{err:?}");
        assert!(err[0] / err[2] > 2.0 * 0.9, "{err:?}");
    }

    #[test]
    fn reduction_rejects_bad_point() {
        assert!(ReducedProblem::new(&k2(), &SpherePoint::basis(3), 1.0, 0, PvOptions::default()).is_err());
        assert!(ReducedProblem::new(&k2(), &SpherePoint::basis(2), 0.0, 0, PvOptions::default()).is_err());
    }
}
