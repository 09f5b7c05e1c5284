//! The acceptance suite, runnable from the library (and the `selftest` command).

use std::f64::consts::PI;
use std::time::Instant;

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::critical::{classify_point, find_critical_points};
use crate::curvature::{pullback_jet, AmbientPoly, CurvatureSpec, TaylorJet4};
use crate::degree::{nondegenerate_degree, Analysis, AnalysisOptions};
use crate::error::{Error, Result};
use crate::geometry::{make_frame, random_orthogonal, SpherePoint};
use crate::invariants::{compute_a0, compute_a1, compute_a2, local_invariants, InvariantOptions};
use crate::problem::builtin_spec;
use crate::pv::{hessian_boundary_integral_quadrature, jet_boundary_average, pv_batch, PvOptions, PvRequest, Source};
use crate::quadrature::AngularRule;
use crate::reduction::{self, blowup_curves, reduced_base, BlowUpOptions, ReducedProblem};
use crate::series::Series3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: u32,
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub elapsed_seconds: f64,
    pub budget_seconds: f64,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "criterion {} [{}] {}: {} ({:.2} s of {:.0} s)",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.detail,
            self.elapsed_seconds,
            self.budget_seconds
        )
    }
}

pub const CRITERIA: [(u32, &str, f64); 9] = [
    (1, "a2 anchor", 1.0),
    (2, "a0 and a1 anchors", 10.0),
    (3, "perturbed family", 30.0),
    (4, "degree table", 60.0),
    (5, "obstruction sanity", 60.0),
    (6, "quadrature identity", 10.0),
    (7, "spectrum", 1.0),
    (8, "reduction properties", 120.0),
    (9, "property suites", 300.0),
];

/// Accumulates named checks; the criterion passes if all of them do.
#[derive(Default)]
struct Checks {
    failed: Vec<String>,
    notes: Vec<String>,
}

impl Checks {
    fn check(&mut self, ok: bool, what: String) {
        if ok {
            self.notes.push(what);
        } else {
            self.failed.push(what);
        }
    }

    fn close(&mut self, name: &str, got: f64, want: f64, tol: f64) {
        let ok = (got - want).abs() <= tol;
        self.check(ok, format!("{name} = {got:.12} (want {want:.12} ± {tol:e})"));
    }
}

fn k2() -> CurvatureSpec {
    builtin_spec("k2").expect("bundled")
}

fn analysis(spec: &CurvatureSpec) -> Result<Analysis> {
    Analysis::run(spec, &AnalysisOptions::default())
}

fn c1(c: &mut Checks) -> Result<()> {
    let spec = k2();
    let opts = InvariantOptions::default();
    let rule = AngularRule::new(opts.pv.angular_degree);
    for p in [SpherePoint::basis(2), SpherePoint::basis(2).antipode()] {
        let rec = classify_point(&spec, &p);
        let a2 = compute_a2(&spec, &rec, &opts)?;
        c.close("a2", a2, -224.0 / 9.0, 1e-9);
        let q = pullback_jet(&spec, &make_frame(&p, 0), &Vector3::zeros(), true).quantities();
        let a2_quad = q.value * compute_a1(&spec, &rec, &opts)? - 15.0 / (8.0 * PI) * hessian_boundary_integral_quadrature(&q.hessian, &rule);
        c.close("a2 (quadrature)", a2_quad, -224.0 / 9.0, 1e-4);
    }
    Ok(())
}

fn c2(c: &mut Checks) -> Result<()> {
    let spec = k2();
    let opts = InvariantOptions::default();
    for p in [SpherePoint::basis(2), SpherePoint::basis(2).antipode()] {
        let rec = classify_point(&spec, &p);
        c.close("a0", compute_a0(&spec, &rec, &opts)?.value, 0.0, 1e-5);
        c.close("a1", compute_a1(&spec, &rec, &opts)?, 0.0, 1e-9);
    }
    Ok(())
}

fn c3(c: &mut Checks) -> Result<()> {
    let a = analysis(&builtin_spec("perturbed_s0.01").expect("bundled"))?;
    for inv in a.table.iter().filter(|i| i.location.chordal_distance(&SpherePoint::basis(2)).min(i.location.chordal_distance(&SpherePoint::basis(2).antipode())) < 1e-6) {
        c.close("a1 (s = 0.01)", inv.a1, 134.40, 1e-6);
    }
    c.check(a.table.iter().filter(|i| i.in_m).count() == 2, "two points of M at s = 0.01".into());
    let t = a.breakpoints();
    c.check(t.len() == 1 && (t[0] - 5.4).abs() < 1e-6, format!("T = {t:?} at s = 0.01"));
    let prof = a.profile()?;
    c.check(prof.breakpoints.is_empty() && prof.intervals.len() == 1, "T ∩ (0, 1] empty at s = 0.01".into());

    let a = analysis(&builtin_spec("perturbed_s0.001").expect("bundled"))?;
    let t = a.breakpoints();
    c.check(t.len() == 1 && (t[0] - 0.54).abs() < 1e-6, format!("T = {t:?} at s = 0.001"));
    let (below, above) = (a.degree_at(0.27)?, a.degree_at(0.77)?);
    c.check(below == 1 && above == -1, format!("d = {below} on (0, 0.54), {above} on (0.54, 1]"));
    let prof = a.profile()?;
    c.check(prof.degree_for(1.0) == Some(-1), "d(1) = -1".into());
    Ok(())
}

fn c4(c: &mut Checks) -> Result<()> {
    for (name, want) in [("k1", 1), ("k2", -1), ("k3", -1)] {
        let a = analysis(&builtin_spec(name).expect("bundled"))?;
        let d = a.degree_at(1.0)?;
        c.check(d == want, format!("{name}: d(1) = {d}"));
        match (name, nondegenerate_degree(&a.table)) {
            ("k2", Err(Error::NotNondegenerate(_))) => c.check(true, "k2 rejected by the nondegenerate formula".into()),
            ("k2", r) => c.check(false, format!("k2 nondegenerate formula gave {r:?}")),
            (_, Ok(v)) => c.check(v == want, format!("{name}: nondegenerate degree {v}")),
            (_, Err(e)) => c.check(false, format!("{name}: {e}")),
        }
    }
    Ok(())
}

fn c5(c: &mut Checks) -> Result<()> {
    let a = analysis(&builtin_spec("linear").expect("bundled"))?;
    c.check(a.records.len() == 2, format!("{} critical points", a.records.len()));
    let d = a.degree_at(1.0)?;
    c.check(d == 0, format!("d = {d}"));
    Ok(())
}

fn random_series(rng: &mut ChaCha8Rng, order: usize) -> Series3 {
    let terms: Vec<([usize; 3], f64)> = Series3::zero(order).table().exps().iter().map(|e| (*e, rng.random_range(-1.0..1.0))).collect();
    Series3::from_terms(order, &terms)
}

fn c6(c: &mut Checks) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut even, mut odd) = (0.0f64, 0.0f64);
    for _ in 0..50 {
        let jet = TaylorJet4::from_series(Vector3::zeros(), random_series(&mut rng, 4));
        let lap = jet.quantities().laplacian;
        even = even.max((jet_boundary_average(&jet, 2) - 2.0 * PI / 3.0 * lap).abs());
        odd = odd.max(jet_boundary_average(&jet, 1).abs()).max(jet_boundary_average(&jet, 3).abs());
    }
    c.check(even <= 1e-12, format!("max |m=2 average − (2π/3)Δ| = {even:e}"));
    c.check(odd <= 1e-14, format!("max |odd average| = {odd:e}"));
    Ok(())
}

fn c7(c: &mut Checks) -> Result<()> {
    let mut worst = 0.0f64;
    let mut prev = f64::NEG_INFINITY;
    let mut monotone = true;
    for n in 2..=10usize {
        for i in 0..=n {
            let v = reduction::spectrum(i, n - i)?;
            let d = (4 + 2 * (n - 1)) as f64;
            worst = worst.max((v - (1.0 - 15.0 / (d * d - 1.0))).abs());
        }
        let v = reduction::spectrum(n, 0)?;
        monotone &= v > prev && v < 1.0;
        prev = v;
    }
    c.check(worst <= 1e-15, format!("max formula deviation {worst:e}"));
    c.check(monotone, "increasing in i + j, below 1".into());
    c.check(reduction::spectrum(1, 0).is_err(), "i + j < 2 rejected".into());
    c.check(
        reduction::NEGATIVE_EIGENVALUE == -4.0 && reduction::NEGATIVE_EIGENVALUE_MULTIPLICITY == 1 && reduction::KERNEL_DIMENSION == 4,
        "negative eigenvalue -4 (multiplicity 1), kernel dimension 4".into(),
    );
    Ok(())
}

fn c8(c: &mut Checks) -> Result<()> {
    let pv = PvOptions::default();
    // β = O(μ³) and ∂γ/∂μ for K₂ at E₂
    let red = ReducedProblem::new(&k2(), &SpherePoint::basis(2), 0.3, 0, pv)?;
    let mut worst = 0.0f64;
    for mu in [1e-3, 2e-3, 5e-3, 1e-2] {
        worst = worst.max(red.beta_curve(0.0, mu)?.beta.norm() / mu.powi(3));
    }
    c.check(worst < 10.0, format!("max |β|/μ³ = {worst:.3e}"));
    let d = red.gamma_derivatives(0.0, 5e-3)?;
    let rel = (d.dmu_fd - d.dmu_closed).abs() / d.dmu_closed.abs();
    c.check(rel <= 0.05, format!("∂γ/∂μ: closed {:.6e}, difference quotient {:.6e} (rel {rel:.2e})", d.dmu_closed, d.dmu_fd));

    // curves of the perturbed family with a bump
    let spec = builtin_spec("perturbed_bump").expect("bundled");
    let base = analysis(&reduced_base(&spec))?;
    let mut opts = BlowUpOptions::new(0.3);
    opts.mu_grid = vec![1e-3, 1.25e-3];
    let curves = blowup_curves(&spec, &base.table, &opts)?;
    c.check(curves.len() == 2, format!("{} curves", curves.len()));
    for cv in &curves {
        let [p, q] = [cv.samples[0], cv.samples[1]];
        let fd = (q.s - p.s) / (q.mu - p.mu);
        let rel = (fd - cv.slope).abs() / cv.slope.abs();
        c.check(rel <= 0.01, format!("slope {:.6e} vs root difference quotient {fd:.6e} (rel {rel:.1e})", cv.slope));
        let ind = base.table[cv.theta_index].morse_index;
        c.check(cv.morse_index + ind == 4, format!("morse index {} + ind {ind} = 4", cv.morse_index));
    }
    Ok(())
}

fn random_poly(rng: &mut ChaCha8Rng) -> AmbientPoly {
    let mut terms = vec![([0u32; 4], 6.0)];
    for _ in 0..8 {
        let mut e = [0u32; 4];
        for _ in 0..rng.random_range(1..=4) {
            e[rng.random_range(0..4)] += 1;
        }
        terms.push((e, rng.random_range(-1.0..1.0)));
    }
    AmbientPoly::new(terms)
}

fn c9(c: &mut Checks) -> Result<()> {
    let opts = InvariantOptions::default();

    // frame independence of the invariants
    let mut worst = 0.0f64;
    for (name, p) in [("k2", SpherePoint::basis(2)), ("k1", SpherePoint::basis(3)), ("k2_plus_bump", SpherePoint::basis(2).antipode())] {
        let spec = builtin_spec(name).expect("bundled");
        let rec = classify_point(&spec, &p);
        let a = local_invariants(&spec, &rec, &InvariantOptions { frame_seed: 11, ..opts })?;
        let b = local_invariants(&spec, &rec, &InvariantOptions { frame_seed: 12, ..opts })?;
        let tol = 2.0 * (a.a0.error + b.a0.error + 1e-9);
        let dev = [(a.a0.value - b.a0.value).abs(), (a.a1 - b.a1).abs(), (a.a2 - b.a2).abs()].into_iter().fold(0.0, f64::max);
        worst = worst.max(dev / tol);
    }
    c.check(worst <= 1.0, format!("frame independence: worst deviation {worst:.2} of allowance"));

    // rotation equivariance
    let spec = builtin_spec("k1").expect("bundled");
    let recs = find_critical_points(&spec, 128, 0)?;
    let table: Vec<_> = recs.iter().map(|r| local_invariants(&spec, r, &opts)).collect::<Result<_>>()?;
    let (mut loc, mut inv) = (0.0f64, 0.0f64);
    let mut counts_ok = true;
    for seed in 0..10 {
        let q = random_orthogonal(100 + seed);
        let rot = spec.rotated(&q);
        let rrecs = find_critical_points(&rot, 128, 0)?;
        counts_ok &= rrecs.len() == recs.len();
        for (r, i) in recs.iter().zip(&table) {
            let image = r.location.transformed(&q);
            let Some(m) = rrecs.iter().min_by(|a, b| a.location.chordal_distance(&image).total_cmp(&b.location.chordal_distance(&image))) else {
                counts_ok = false;
                continue;
            };
            loc = loc.max(m.location.chordal_distance(&image));
            counts_ok &= m.morse_index == r.morse_index;
            let j = local_invariants(&rot, m, &opts)?;
            inv = inv.max((j.a1 - i.a1).abs() / i.a1.abs().max(1.0)).max((j.a2 - i.a2).abs() / i.a2.abs().max(1.0));
        }
    }
    c.check(counts_ok && loc <= 1e-6, format!("rotation equivariance: points matched to {loc:.1e}, indices preserved"));
    c.check(inv <= 1e-8, format!("rotation equivariance: a1, a2 agree to {inv:.1e}"));

    // jet versus direct evaluation
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut min_order = f64::INFINITY;
    for case in 0..20 {
        let spec = CurvatureSpec::new(random_poly(&mut rng));
        let theta = SpherePoint::new(nalgebra::Vector4::from_fn(|_, _| rng.random_range(-1.0..1.0))).expect("nonzero");
        let frame = make_frame(&theta, case);
        let y = Vector3::from_fn(|_, _| rng.random_range(-0.57..0.57));
        let u = Vector3::from_fn(|_, _| rng.random_range(-1.0..1.0f64)).normalize();
        let jet = pullback_jet(&spec, &frame, &y, false);
        let err = |d: f64| (jet.eval_taylor(4, &(u * d)) - spec.pullback_value(&frame, &(y + u * d), false)).abs();
        let (e1, e2) = (err(2e-2), err(1e-2));
        min_order = min_order.min((e1 / e2).log2());
    }
    c.check(min_order >= 4.8, format!("jet consistency order ≥ {min_order:.2}"));

    // halving the inner radius of the principal value
    let mut worst = 0.0f64;
    for (name, p) in [("k2", SpherePoint::basis(2)), ("k2_plus_bump", SpherePoint::basis(2)), ("k1", SpherePoint::basis(1))] {
        let spec = builtin_spec(name).expect("bundled");
        let frame = make_frame(&p, 0);
        let pv = PvOptions::default();
        let a = pv_batch(&spec, &frame, &Vector3::zeros(), &[PvRequest::A0], Source::Full, &pv)?[0];
        let half = PvOptions { inner_radius: pv.inner_radius / 2.0, ..pv };
        let b = pv_batch(&spec, &frame, &Vector3::zeros(), &[PvRequest::A0], Source::Full, &half)?[0];
        worst = worst.max((a.value - b.value).abs() / (2.0 * a.error_estimate.max(b.error_estimate)));
    }
    c.check(worst < 1.0, format!("inner-radius halving: worst change {worst:.2} of 2·error"));
    Ok(())
}

/// Runs one criterion (1–9).
pub fn run_criterion(id: u32) -> Result<CriterionResult> {
    let &(_, name, budget) = CRITERIA.iter().find(|c| c.0 == id).ok_or_else(|| Error::Invalid(format!("no criterion {id}")))?;
    let start = Instant::now();
    let mut checks = Checks::default();
    let outcome = match id {
        1 => c1(&mut checks),
        2 => c2(&mut checks),
        3 => c3(&mut checks),
        4 => c4(&mut checks),
        5 => c5(&mut checks),
        6 => c6(&mut checks),
        7 => c7(&mut checks),
        8 => c8(&mut checks),
        _ => c9(&mut checks),
    };
    let elapsed = start.elapsed().as_secs_f64();
    if let Err(e) = outcome {
        checks.failed.push(format!("error: {e}"));
    }
    if elapsed > budget {
        checks.failed.push(format!("runtime {elapsed:.1} s over budget"));
    }
    let passed = checks.failed.is_empty();
    let detail = if passed { checks.notes.join("; ") } else { checks.failed.join("; ") };
    Ok(CriterionResult { id, name: name.into(), passed, detail, elapsed_seconds: elapsed, budget_seconds: budget })
}

pub fn run_all() -> Vec<CriterionResult> {
    CRITERIA.iter().map(|c| run_criterion(c.0).expect("known criterion")).collect()
}
