//! Principal-value and improper integrals over R³ with power-law weights.
//!
//! Computes
//!
//! ```text
//! PV ∫_{R³} (f(y + x) − T^m_y(x)) · x^moment · |x|^{−w} dx
//! ```
//!
//! where `f` is a chart pullback and `T^m_y` its degree-`m` Taylor polynomial at
//! `y`. The integral is split into three radial pieces:
//!
//! * `|x| < ρ`: the exact high-order Taylor series of `f` at `y` is integrated
//!   shell by shell in closed form. Odd-degree terms have zero angular moment,
//!   which is exactly the symmetric cancellation that defines the principal value.
//! * `ρ ≤ |x| ≤ 1`: adaptive Gauss–Kronrod in `r` over angular shell integrals.
//! * `|x| > 1`: the same after the substitution `r = 1/u`.
//!
//! The angular error is estimated by repeating every shell with a coarser rule.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};

use crate::curvature::{BumpFunction, CurvatureSpec, TaylorJet4};
use crate::error::{Error, Result};
use crate::geometry::{make_frame, stereo_to_sphere, ChartFrame};
use crate::quadrature::{integrate_adaptive, AngularRule};
use crate::series::Series3;

/// Which function is integrated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    /// `k`, without perturbation.
    Base,
    /// `k + s h`.
    Full,
    /// `h` alone, unscaled.
    Perturbation,
}

/// One integral of a batch: `(f − T^m) x^moment |x|^{−w}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PvRequest {
    /// Degree of the subtracted Taylor polynomial; `None` subtracts nothing.
    pub subtract_order: Option<usize>,
    pub weight_power: i32,
    /// 0 for no factor, `i ∈ 1..=3` for a factor `x_i`.
    pub moment: usize,
}

impl PvRequest {
    pub const A0: PvRequest = PvRequest { subtract_order: Some(2), weight_power: 6, moment: 0 };

    pub fn odd_moment(i: usize) -> PvRequest {
        PvRequest { subtract_order: Some(3), weight_power: 8, moment: i }
    }

    pub fn plain(weight_power: i32) -> PvRequest {
        PvRequest { subtract_order: None, weight_power, moment: 0 }
    }

    fn extra(&self) -> [usize; 3] {
        let mut e = [0; 3];
        if self.moment > 0 {
            e[self.moment - 1] = 1;
        }
        e
    }

    fn moment_degree(&self) -> i32 {
        i32::from(self.moment > 0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PvOptions {
    /// Absolute tolerance of the radial integration.
    pub tol: f64,
    pub angular_degree: usize,
    pub coarse_angular_degree: usize,
    pub series_order: usize,
    /// Upper bound for the inner (series) radius.
    pub inner_radius: f64,
    pub max_depth: u32,
}

impl Default for PvOptions {
    fn default() -> Self {
        PvOptions { tol: 1e-6, angular_degree: 31, coarse_angular_degree: 23, series_order: 16, inner_radius: 0.2, max_depth: 40 }
    }
}

/// A principal value with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PvResult {
    pub value: f64,
    pub error_estimate: f64,
    pub shells_used: usize,
}

const MAX_BATCH: usize = 4;

/// Inner radius: inside the convergence region of the series and clear of every bump boundary.
fn inner_radius(spec: &CurvatureSpec, frame: &ChartFrame, y: &Vector3<f64>, source: Source, opts: &PvOptions) -> Result<f64> {
    let ny = y.norm();
    let mut rho = opts.inner_radius * ((1.0 + 2.0 * ny * ny).sqrt() - ny);
    if source != Source::Base {
        let at = stereo_to_sphere(frame, y);
        for b in &spec.bump_perturbations {
            if b.amplitude == 0.0 || b.distance_outside(&at) >= 0.0 {
                continue;
            }
            let margin = -b.distance_outside(&at);
            if margin < 1e-6 {
                return Err(Error::NonIntegrable(format!("base point lies on the boundary of a bump support (margin {margin:e})")));
            }
            // the chart is 2-Lipschitz into R⁴
            rho = rho.min(margin / 3.0);
        }
    }
    Ok(rho)
}

fn source_series(spec: &CurvatureSpec, frame: &ChartFrame, y: &Vector3<f64>, order: usize, source: Source) -> Series3 {
    match source {
        Source::Base => spec.pullback_series(frame, y, order, false),
        Source::Full => spec.pullback_series(frame, y, order, true),
        Source::Perturbation => spec.h_series(frame, y, order),
    }
}

fn source_value(spec: &CurvatureSpec, frame: &ChartFrame, z: &Vector3<f64>, source: Source) -> f64 {
    match source {
        Source::Base => spec.pullback_value(frame, z, false),
        Source::Full => spec.pullback_value(frame, z, true),
        Source::Perturbation => spec.h_value(&stereo_to_sphere(frame, z)),
    }
}

/// Closed-form integral of the residual series over the ball `|x| < ρ`, with a tail estimate.
fn inner_integral(series: &Series3, req: &PvRequest, rho: f64) -> Result<(f64, f64)> {
    let start = req.subtract_order.map_or(0, |m| m + 1);
    let n = series.order();
    let scale = series.max_abs().max(1e-300);
    let mut value = 0.0;
    let mut tail = 0.0;
    for d in start..=n {
        let c = series.sphere_moment(d, req.extra());
        let p = d as i32 + req.moment_degree() - req.weight_power + 2;
        if p <= -1 {
            if c.abs() > 1e-12 * scale {
                return Err(Error::NonIntegrable(format!(
                    "degree-{d} term with nonzero shell moment {c:e} gives a radial integrand ~ r^{p} at the origin"
                )));
            }
            continue;
        }
        let term = c * rho.powi(p + 1) / (p + 1) as f64;
        value += term;
        if d + 2 > n {
            tail += term.abs();
        }
    }
    Ok((value, tail))
}

/// `∫ b(σ_θ(y + x)) x^moment |x|^{−w} dx` for a bump whose support avoids `σ_θ(y)`.
///
/// Integrated in a chart centered at the bump, where the profile is radial and
/// `dx = ((1 + |z|²)/(1 + |x′|²))³ dx′` for `z = y + x`.
fn bump_batch(
    bump: &BumpFunction,
    frame: &ChartFrame,
    y: &Vector3<f64>,
    requests: &[PvRequest],
    fine: &AngularRule,
    coarse: &AngularRule,
    opts: &PvOptions,
) -> [(f64, f64); MAX_BATCH] {
    let mut out = [(0.0, 0.0); MAX_BATCH];
    if bump.amplitude == 0.0 {
        return out;
    }
    let own = make_frame(&bump.center, 0);
    let rb = bump.radius.min(2.0 - 1e-9);
    let chart_radius = rb / (4.0 - rb * rb).sqrt();
    let theta = frame.base().coords();
    let shell = |r: f64| -> [f64; 2 * MAX_BATCH] {
        let mut res = [0.0; 2 * MAX_BATCH];
        // chordal distance to the center is 2r/√(1+r²)
        let u = 4.0 * r * r / (1.0 + r * r) / (rb * rb);
        if u >= 1.0 {
            return res;
        }
        let profile = bump.amplitude * (1.0 - 1.0 / (1.0 - u)).exp();
        for (slot, rule) in [fine, coarse].into_iter().enumerate() {
            let mut acc = [0.0; MAX_BATCH];
            for (w, node) in rule.weights().iter().zip(rule.nodes()) {
                let p = stereo_to_sphere(&own, &(node * r));
                let c = p.coords().dot(theta);
                if c < -1.0 + 1e-12 {
                    continue;
                }
                let z = Vector3::from_fn(|i, _| p.coords().dot(&frame.tangent()[i])) / (1.0 + c);
                let x = z - y;
                let jac = ((1.0 + z.norm_squared()) / (1.0 + r * r)).powi(3);
                let nx = x.norm();
                for (q, req) in requests.iter().enumerate() {
                    let mom = if req.moment > 0 { x[req.moment - 1] } else { 1.0 };
                    acc[q] += w * jac * mom * nx.powi(-req.weight_power);
                }
            }
            for q in 0..requests.len() {
                res[slot * MAX_BATCH + q] = profile * acc[q] * r * r;
            }
        }
        res
    };
    let quad = integrate_adaptive(shell, 0.0, chart_radius, opts.tol / 4.0, opts.max_depth);
    for q in 0..requests.len() {
        let err = quad.error[q] + (quad.value[q] - quad.value[MAX_BATCH + q]).abs();
        out[q] = (quad.value[q], err);
    }
    out
}

/// Several principal-value integrals sharing one set of function evaluations.
///
/// Bumps whose support avoids the base point are integrated separately in
/// their own chart; everything else goes through the three-piece radial split.
pub fn pv_batch(
    spec: &CurvatureSpec,
    frame: &ChartFrame,
    y: &Vector3<f64>,
    requests: &[PvRequest],
    source: Source,
    opts: &PvOptions,
) -> Result<Vec<PvResult>> {
    assert!(!requests.is_empty() && requests.len() <= MAX_BATCH, "batch of 1..={MAX_BATCH} requests");
    for r in requests {
        if r.moment > 3 {
            return Err(Error::Invalid(format!("moment index {} out of range", r.moment)));
        }
    }
    let at = stereo_to_sphere(frame, y);
    let (inside, outside): (Vec<BumpFunction>, Vec<BumpFunction>) = if source == Source::Base {
        (Vec::new(), Vec::new())
    } else {
        spec.bump_perturbations.iter().cloned().partition(|b| b.distance_outside(&at) < 0.0)
    };
    let main_spec = spec.clone().with_bumps(inside, spec.s);
    let bump_scale = match source {
        Source::Base => 0.0,
        Source::Full => spec.s,
        Source::Perturbation => 1.0,
    };

    let rho = inner_radius(spec, frame, y, source, opts)?;
    let series = source_series(&main_spec, frame, y, opts.series_order, source);
    let mut inner = Vec::with_capacity(requests.len());
    for r in requests {
        inner.push(inner_integral(&series, r, rho)?);
    }

    let max_m = requests.iter().filter_map(|r| r.subtract_order).max().unwrap_or(0);
    let taylor: Vec<Option<Series3>> = requests.iter().map(|r| r.subtract_order.map(|m| series.with_order(max_m.max(1)).truncated(m))).collect();
    let fine = AngularRule::new(opts.angular_degree);
    let coarse = AngularRule::new(opts.coarse_angular_degree);

    // shell integrals of the radial integrand r² ∫ (f − T) ω^e r^{|e|} r^{−w} dω for both rules
    let shell = |r: f64| -> [f64; 2 * MAX_BATCH] {
        let mut out = [0.0; 2 * MAX_BATCH];
        for (slot, rule) in [&fine, &coarse].into_iter().enumerate() {
            let mut acc = [0.0; MAX_BATCH];
            for (w, node) in rule.weights().iter().zip(rule.nodes()) {
                let x = node * r;
                let f = source_value(&main_spec, frame, &(y + x), source);
                for (q, req) in requests.iter().enumerate() {
                    let t = taylor[q].as_ref().map_or(0.0, |t| t.eval(&x));
                    let mom = if req.moment > 0 { node[req.moment - 1] } else { 1.0 };
                    acc[q] += w * (f - t) * mom;
                }
            }
            for (q, req) in requests.iter().enumerate() {
                let p = req.moment_degree() - req.weight_power + 2;
                out[slot * MAX_BATCH + q] = acc[q] * r.powi(p);
            }
        }
        out
    };

    let mid = integrate_adaptive(&shell, rho, 1.0, opts.tol / 4.0, opts.max_depth);
    let far = integrate_adaptive(
        |u: f64| {
            let mut v = shell(1.0 / u);
            v.iter_mut().for_each(|c| *c /= u * u);
            v
        },
        0.0,
        1.0,
        opts.tol / 4.0,
        opts.max_depth,
    );
    let mut bumps = [(0.0, 0.0); MAX_BATCH];
    if bump_scale != 0.0 {
        for b in &outside {
            let part = bump_batch(b, frame, y, requests, &fine, &coarse, opts);
            for q in 0..requests.len() {
                bumps[q].0 += bump_scale * part[q].0;
                bumps[q].1 += bump_scale.abs() * part[q].1;
            }
        }
    }

    let shells = 15 * (mid.intervals + far.intervals);
    Ok((0..requests.len())
        .map(|q| {
            let smooth = inner[q].0 + mid.value[q] + far.value[q];
            let coarse_value = inner[q].0 + mid.value[MAX_BATCH + q] + far.value[MAX_BATCH + q];
            let error_estimate = inner[q].1 + mid.error[q] + far.error[q] + (smooth - coarse_value).abs() + bumps[q].1;
            PvResult { value: smooth + bumps[q].0, error_estimate, shells_used: shells }
        })
        .collect())
}

/// `PV ∫ (f(x + y) − T^m(x)) x^moment |x|^{−w} dx` for a single request.
#[allow(clippy::too_many_arguments)]
pub fn pv_weighted_integral(
    spec: &CurvatureSpec,
    frame: &ChartFrame,
    y: &Vector3<f64>,
    subtract_order: Option<usize>,
    weight_power: i32,
    moment: usize,
    source: Source,
    opts: &PvOptions,
) -> Result<PvResult> {
    let req = PvRequest { subtract_order, weight_power, moment };
    Ok(pv_batch(spec, frame, y, &[req], source, opts)?[0])
}

/// `∫_{∂B₁} (xᵀ H x)² dS = (4π/15) ((tr H)² + 2 ‖H‖²_F)`.
pub fn hessian_boundary_integral(h: &Matrix3<f64>) -> f64 {
    let tr = h.trace();
    4.0 * PI / 15.0 * (tr * tr + 2.0 * h.norm_squared())
}

/// The same integral by angular quadrature.
pub fn hessian_boundary_integral_quadrature(h: &Matrix3<f64>, rule: &AngularRule) -> f64 {
    rule.integrate(|x| (x.transpose() * h * x)[0].powi(2))
}

/// `∫_{∂B₁}` of the degree-`m` homogeneous part of the jet.
///
/// Zero for odd `m`; `(2π/3) Δ` for `m = 2`.
pub fn jet_boundary_average(jet: &TaylorJet4, m: usize) -> f64 {
    assert!(m <= 4, "jet order is 4");
    jet.series().sphere_moment(m, [0, 0, 0])
}
