//! Local invariants `a₀, a₁, a₂` at critical points, the sets `M`, `M_*`, `T`,
//! and the sign classification `Crit₋(k, t)`.

use std::f64::consts::PI;

use nalgebra::Vector3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::critical::{laplacian_tol, CriticalRecord, Sign, GRAD_TOL};
use crate::curvature::{pullback_jet, CurvatureSpec, JetQuantities};
use crate::error::{Error, Result};
use crate::geometry::{make_frame, ChartFrame, SpherePoint};
use crate::pv::{hessian_boundary_integral, pv_batch, PvOptions, PvRequest, Source};

/// Lower bound of the `a₀` zero tolerance.
pub const A0_ZERO_TOL: f64 = 1e-5;
/// `|a₂|` must exceed this for membership in `M`.
pub const A2_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvariantOptions {
    pub pv: PvOptions,
    pub frame_seed: u64,
}

impl Default for InvariantOptions {
    fn default() -> Self {
        InvariantOptions { pv: PvOptions::default(), frame_seed: 0 }
    }
}

/// `a₀` with its quadrature error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalInvariants {
    pub location: SpherePoint,
    pub morse_index: usize,
    pub laplacian: f64,
    pub laplacian_tol: f64,
    pub a0: Estimate,
    pub a0_tol: f64,
    pub a1: f64,
    pub a2: f64,
    pub in_m: bool,
    /// `−a₁/a₂` for points of `M`.
    pub breakpoint: Option<f64>,
    /// `Δ = a₀ = 0` but `a₂ ≈ 0`: the point is outside the hypotheses of the degree formula.
    pub outside_hypotheses: bool,
}

impl LocalInvariants {
    pub fn laplacian_sign(&self) -> Sign {
        Sign::of(self.laplacian, self.laplacian_tol)
    }

    pub fn a0_sign(&self) -> Sign {
        Sign::of(self.a0.value, self.a0_tol)
    }

    /// `θ ∈ M_*(t₀)`: in `M` with `a₁ + t₀ a₂ > 0`.
    pub fn in_m_star(&self, t0: f64) -> bool {
        self.in_m && self.a1 + t0 * self.a2 > 0.0
    }

    fn third_tol(&self) -> f64 {
        A2_TOL * self.a1.abs().max(self.a2.abs()).max(1.0)
    }

    /// Lexicographic sign of `(Δk_θ(0), a₀, −(a₁ + t a₂))`.
    pub fn sign_at(&self, t: f64) -> Result<Sign> {
        let entries = [
            (self.laplacian_sign(), "laplacian"),
            (self.a0_sign(), "a0"),
            (Sign::of(-(self.a1 + t * self.a2), self.third_tol()), "a1 + t a2"),
        ];
        for (s, name) in entries {
            match s {
                Sign::Zero => continue,
                Sign::Inconclusive => {
                    return Err(Error::Inconclusive {
                        location: self.location.to_array(),
                        reason: format!("{name} lies within the inconclusive band of its zero tolerance"),
                    })
                }
                other => return Ok(other),
            }
        }
        Err(Error::Inconclusive { location: self.location.to_array(), reason: format!("all of Δ, a0, a1 + t a2 vanish at t = {t}") })
    }
}

fn jet_at(spec: &CurvatureSpec, frame: &ChartFrame) -> JetQuantities {
    pullback_jet(spec, frame, &Vector3::zeros(), true).quantities()
}

fn require_nondegenerate(record: &CriticalRecord) -> Result<()> {
    if !record.nondegenerate {
        return Err(Error::SingularHessian(record.location.to_array()));
    }
    Ok(())
}

/// `PV ∫ (k_θ − T²) |x|⁻⁶` in the frame seeded by `opts.frame_seed`.
pub fn compute_a0(spec: &CurvatureSpec, record: &CriticalRecord, opts: &InvariantOptions) -> Result<Estimate> {
    if record.grad_norm >= GRAD_TOL {
        return Err(Error::Invalid(format!("gradient {:e} at {:?} is not critical", record.grad_norm, record.location.to_array())));
    }
    let frame = make_frame(&record.location, opts.frame_seed);
    let r = pv_batch(spec, &frame, &Vector3::zeros(), &[PvRequest::A0], Source::Full, &opts.pv)?[0];
    Ok(Estimate { value: r.value, error: r.error_estimate })
}

/// `a₁ = Δ²k_θ(0) + g·H⁻¹g` with `g = ∇Δk_θ(0)`.
pub fn a1_from_jet(q: &JetQuantities) -> Result<f64> {
    let hinv = q.hessian.try_inverse().ok_or(Error::SingularHessian([f64::NAN; 4]))?;
    Ok(q.bilaplacian + q.grad_laplacian.dot(&(hinv * q.grad_laplacian)))
}

/// `a₂ = k_θ(0) a₁ − (15/8π) ∫_{∂B₁} (xᵀHx)²`.
pub fn a2_from_jet(q: &JetQuantities, a1: f64) -> f64 {
    q.value * a1 - 15.0 / (8.0 * PI) * hessian_boundary_integral(&q.hessian)
}

pub fn compute_a1(spec: &CurvatureSpec, record: &CriticalRecord, opts: &InvariantOptions) -> Result<f64> {
    require_nondegenerate(record)?;
    let q = jet_at(spec, &make_frame(&record.location, opts.frame_seed));
    a1_from_jet(&q).map_err(|_| Error::SingularHessian(record.location.to_array()))
}

pub fn compute_a2(spec: &CurvatureSpec, record: &CriticalRecord, opts: &InvariantOptions) -> Result<f64> {
    require_nondegenerate(record)?;
    let q = jet_at(spec, &make_frame(&record.location, opts.frame_seed));
    let a1 = a1_from_jet(&q).map_err(|_| Error::SingularHessian(record.location.to_array()))?;
    Ok(a2_from_jet(&q, a1))
}

/// All invariants at one critical point.
pub fn local_invariants(spec: &CurvatureSpec, record: &CriticalRecord, opts: &InvariantOptions) -> Result<LocalInvariants> {
    require_nondegenerate(record)?;
    let q = jet_at(spec, &make_frame(&record.location, opts.frame_seed));
    let a1 = a1_from_jet(&q).map_err(|_| Error::SingularHessian(record.location.to_array()))?;
    let a2 = a2_from_jet(&q, a1);
    let a0 = compute_a0(spec, record, opts)?;
    let a0_tol = A0_ZERO_TOL.max(3.0 * a0.error);
    let lap_tol = laplacian_tol(record);
    let flat = Sign::of(record.laplacian, lap_tol) == Sign::Zero && Sign::of(a0.value, a0_tol) == Sign::Zero;
    let in_m = flat && a2.abs() > A2_TOL;
    Ok(LocalInvariants {
        location: record.location,
        morse_index: record.morse_index,
        laplacian: record.laplacian,
        laplacian_tol: lap_tol,
        a0,
        a0_tol,
        a1,
        a2,
        in_m,
        breakpoint: in_m.then(|| -a1 / a2),
        outside_hypotheses: flat && !in_m,
    })
}

/// Invariants at every record, in record order.
pub fn invariant_table(spec: &CurvatureSpec, records: &[CriticalRecord], opts: &InvariantOptions) -> Result<Vec<LocalInvariants>> {
    records.par_iter().map(|r| local_invariants(spec, r, opts)).collect()
}

/// Members of `Crit₋(k, t)`.
pub fn crit_minus(table: &[LocalInvariants], t: f64) -> Result<Vec<&LocalInvariants>> {
    let mut out = Vec::new();
    for inv in table {
        if inv.sign_at(t)? == Sign::Negative {
            out.push(inv);
        }
    }
    Ok(out)
}

/// `T = {−a₁/a₂ : θ ∈ M}`, sorted, with coincident values merged.
pub fn compute_t(table: &[LocalInvariants]) -> Vec<f64> {
    let mut t: Vec<f64> = table.iter().filter_map(|i| i.breakpoint).collect();
    t.sort_by(f64::total_cmp);
    t.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * b.abs().max(1.0));
    t
}
