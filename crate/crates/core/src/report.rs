//! Machine-readable run reports and plain-text tables.

use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::critical::{self, classify_table, CriticalRecord};
use crate::degree::{Analysis, DegreeReport, BREAKPOINT_TOL};
use crate::error::Result;
use crate::invariants::{self, LocalInvariants};
use crate::problem::ProblemFile;
use crate::reduction::{blowup_curves, reduced_base, BlowUpCurve, BlowUpOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Crit,
    Invariants,
    Degree,
    Blowup,
}

/// Every tolerance that influenced the result.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub grad: f64,
    pub dedupe: f64,
    pub degeneracy: f64,
    pub laplacian_zero: f64,
    pub a0_zero_min: f64,
    pub a2: f64,
    pub breakpoint: f64,
    pub pv_tol: f64,
    pub angular_degree: usize,
    pub coarse_angular_degree: usize,
    pub series_order: usize,
}

impl Tolerances {
    pub fn for_problem(p: &ProblemFile) -> Tolerances {
        let pv = p.pv_options();
        Tolerances {
            grad: critical::GRAD_TOL,
            dedupe: critical::DEDUPE_TOL,
            degeneracy: critical::DEGENERACY_TOL,
            laplacian_zero: critical::LAPLACIAN_ZERO_TOL,
            a0_zero_min: invariants::A0_ZERO_TOL,
            a2: invariants::A2_TOL,
            breakpoint: BREAKPOINT_TOL,
            pv_tol: pv.tol,
            angular_degree: pv.angular_degree,
            coarse_angular_degree: pv.coarse_angular_degree,
            series_order: pv.series_order,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowUpSection {
    pub t0: f64,
    pub curves: Vec<BlowUpCurve>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub tool: String,
    pub version: String,
    pub command: Command,
    /// SHA-256 of the canonical JSON of the problem.
    pub input_hash: String,
    pub problem: ProblemFile,
    pub tolerances: Tolerances,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub critical_points: Option<Vec<CriticalRecord>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub invariants: Option<Vec<LocalInvariants>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub degree: Option<DegreeReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub blowup: Option<BlowUpSection>,
    pub wall_time_seconds: f64,
}

pub fn input_hash(p: &ProblemFile) -> String {
    let canonical = serde_json::to_string(p).expect("problem files serialize");
    Sha256::digest(canonical.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    /// JSON with the wall time zeroed: byte-identical across runs of the same input.
    pub fn to_json_deterministic(&self) -> String {
        RunReport { wall_time_seconds: 0.0, ..self.clone() }.to_json()
    }
}

/// Runs one command on a problem. `t0` is used by [`Command::Blowup`] only.
pub fn run(command: Command, problem: &ProblemFile, t0: f64) -> Result<RunReport> {
    let start = Instant::now();
    let spec = problem.spec()?;
    let opts = problem.analysis_options();
    let mut report = RunReport {
        tool: "s3curv".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command,
        input_hash: input_hash(problem),
        problem: problem.clone(),
        tolerances: Tolerances::for_problem(problem),
        critical_points: None,
        invariants: None,
        degree: None,
        blowup: None,
        wall_time_seconds: 0.0,
    };
    match command {
        Command::Crit => {
            report.critical_points = Some(critical::find_critical_points(&spec, opts.n_starts, opts.seed)?);
        }
        Command::Invariants | Command::Degree => {
            let a = Analysis::run(&spec, &opts)?;
            if command == Command::Degree {
                let [lo, hi] = problem.t_range;
                report.degree = Some(a.profile()?.restricted(lo, hi));
            }
            report.critical_points = Some(a.records);
            report.invariants = Some(a.table);
        }
        Command::Blowup => {
            let base = reduced_base(&spec);
            let a = Analysis::run(&base, &opts)?;
            let bopts = BlowUpOptions { frame_seed: opts.seed, pv: problem.pv_options(), ..BlowUpOptions::new(t0) };
            let curves = blowup_curves(&spec, &a.table, &bopts)?;
            report.critical_points = Some(a.records);
            report.invariants = Some(a.table);
            report.blowup = Some(BlowUpSection { t0, curves });
        }
    }
    report.wall_time_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

fn point(p: &crate::geometry::SpherePoint) -> String {
    let a = p.to_array().map(|c| if c.abs() < 5e-13 { 0.0 } else { c });
    format!("({:>8.5}, {:>8.5}, {:>8.5}, {:>8.5})", a[0], a[1], a[2], a[3])
}

pub fn render_critical(records: &[CriticalRecord]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<4} {:<42} {:>5} {:>13} {:>10}  hessian eigenvalues", "#", "point", "index", "laplacian", "sign");
    for (i, (r, c)) in records.iter().zip(classify_table(records)).enumerate() {
        let _ = writeln!(
            out,
            "{:<4} {:<42} {:>5} {:>13.6e} {:>10}  [{:.6e}, {:.6e}, {:.6e}]",
            i,
            point(&r.location),
            r.morse_index,
            r.laplacian,
            c.laplacian_sign.symbol(),
            r.hessian_eigs[0],
            r.hessian_eigs[1],
            r.hessian_eigs[2]
        );
    }
    out
}

pub fn render_invariants(table: &[LocalInvariants]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<4} {:<42} {:>5} {:>5} {:>24} {:>15} {:>15} {:>4} {:>12}", "#", "point", "index", "lap", "a0 ± err", "a1", "a2", "M", "-a1/a2");
    for (i, p) in table.iter().enumerate() {
        let _ = writeln!(
            out,
            "{:<4} {:<42} {:>5} {:>5} {:>13.6e} ± {:<8.1e} {:>15.8} {:>15.8} {:>4} {:>12}",
            i,
            point(&p.location),
            p.morse_index,
            p.laplacian_sign().symbol(),
            p.a0.value,
            p.a0.error,
            p.a1 + 0.0,
            p.a2,
            if p.in_m { "yes" } else if p.outside_hypotheses { "?" } else { "no" },
            p.breakpoint.map_or("-".to_string(), |b| format!("{:.8}", b + 0.0))
        );
    }
    out
}

pub fn render_degree(d: &DegreeReport) -> String {
    let mut out = String::new();
    let bp: Vec<String> = d.breakpoints.iter().map(|b| format!("{b:.10}")).collect();
    let _ = writeln!(out, "breakpoints in (0, 1]: {{{}}}", bp.join(", "));
    for i in &d.intervals {
        let verdict = if i.solvable { "solvable" } else { "no conclusion (d = 0)" };
        let close = if i.closed_right { ']' } else { ')' };
        let _ = writeln!(out, "t in ({:.10}, {:.10}{close}: d = {:>3}  {verdict}", i.t_lo, i.t_hi, i.degree);
    }
    out
}

pub fn render_blowup(b: &BlowUpSection) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "t0 = {}", b.t0);
    for c in &b.curves {
        let _ = writeln!(out, "theta #{} {}: slope ds/dmu = {:.10e}, Morse index of blow-up solutions = {}", c.theta_index, point(&c.theta), c.slope, c.morse_index);
        for s in &c.samples {
            let _ = writeln!(out, "    mu = {:.6e}  s = {:.10e}  beta = [{:.3e}, {:.3e}, {:.3e}]", s.mu, s.s, s.y[0], s.y[1], s.y[2]);
        }
    }
    out
}

/// Human-readable rendering of everything in the report.
pub fn render(r: &RunReport) -> String {
    let mut out = String::new();
    if let Some(inv) = &r.invariants {
        out += &render_invariants(inv);
    } else if let Some(c) = &r.critical_points {
        out += &render_critical(c);
    }
    if let Some(d) = &r.degree {
        out += &render_degree(d);
    }
    if let Some(b) = &r.blowup {
        out += &render_blowup(b);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::builtin;

    #[test]
    fn hash_is_stable() {
        let p = builtin("k1").unwrap();
        assert_eq!(input_hash(&p), input_hash(&ProblemFile::parse(&p.to_json()).unwrap()));
        assert_ne!(input_hash(&p), input_hash(&builtin("k2").unwrap()));
    }

    #[test]
    fn crit_report() {
        let mut p = builtin("linear").unwrap();
        p.options.n_starts = 64;
        let r = run(Command::Crit, &p, 1.0).unwrap();
        assert_eq!(r.critical_points.as_ref().unwrap().len(), 2);
        assert!(render(&r).contains("index"));
        let again = run(Command::Crit, &p, 1.0).unwrap();
        assert_eq!(r.to_json_deterministic(), again.to_json_deterministic());
    }
}
