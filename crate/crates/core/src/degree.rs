//! The degree `d(t) = −(1 + Σ_{Crit₋(k,t)} (−1)^{ind})` over `t ∈ (0, 1]`.

use serde::{Deserialize, Serialize};

use crate::critical::{find_critical_points, CriticalRecord, Sign, DEFAULT_STARTS};
use crate::curvature::CurvatureSpec;
use crate::error::{Error, Result};
use crate::invariants::{compute_t, crit_minus, invariant_table, InvariantOptions, LocalInvariants};

/// Distance from a breakpoint at which `t` is rejected.
pub const BREAKPOINT_TOL: f64 = 1e-9;

fn sum_signs<'a>(points: impl IntoIterator<Item = &'a LocalInvariants>) -> i64 {
    points.into_iter().map(|p| if p.morse_index % 2 == 0 { 1 } else { -1 }).sum()
}

/// `d(t)` from a precomputed invariant table.
pub fn degree_at(table: &[LocalInvariants], t: f64) -> Result<i64> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::Invalid(format!("t = {t} outside (0, 1]")));
    }
    if let Some(b) = compute_t(table).into_iter().find(|b| (t - b).abs() <= BREAKPOINT_TOL) {
        return Err(Error::Breakpoint { t, breakpoint: b });
    }
    Ok(-(1 + sum_signs(crit_minus(table, t)?)))
}

/// The `t`-independent degree when `Δk ≠ 0` at every critical point.
pub fn nondegenerate_degree(table: &[LocalInvariants]) -> Result<i64> {
    let bad: Vec<[f64; 4]> =
        table.iter().filter(|p| matches!(p.laplacian_sign(), Sign::Zero | Sign::Inconclusive)).map(|p| p.location.to_array()).collect();
    if !bad.is_empty() {
        return Err(Error::NotNondegenerate(bad));
    }
    Ok(-(1 + sum_signs(table.iter().filter(|p| p.laplacian_sign() == Sign::Negative))))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeInterval {
    pub t_lo: f64,
    pub t_hi: f64,
    /// Whether `t_hi` itself belongs to the interval (only for `t_hi = 1`).
    pub closed_right: bool,
    pub degree: i64,
    pub solvable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRow {
    pub invariants: LocalInvariants,
    /// Membership in `Crit₋` on each interval.
    pub in_crit_minus: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeReport {
    /// Elements of `T` in `(0, 1]`, ascending; these `t` are excluded.
    pub breakpoints: Vec<f64>,
    pub intervals: Vec<DegreeInterval>,
    pub per_point: Vec<PointRow>,
}

impl DegreeReport {
    /// Degree on the interval containing `t`, if `t` is not a breakpoint.
    pub fn degree_for(&self, t: f64) -> Option<i64> {
        self.intervals
            .iter()
            .find(|i| t > i.t_lo && (t < i.t_hi || (i.closed_right && t == i.t_hi)))
            .map(|i| i.degree)
    }

    /// The report clipped to `(lo, hi]`.
    pub fn restricted(&self, lo: f64, hi: f64) -> DegreeReport {
        let mut keep = Vec::new();
        let mut intervals = Vec::new();
        for (n, i) in self.intervals.iter().enumerate() {
            let (a, b) = (i.t_lo.max(lo), i.t_hi.min(hi));
            if a < b {
                keep.push(n);
                intervals.push(DegreeInterval { t_lo: a, t_hi: b, closed_right: b < i.t_hi || i.closed_right, ..i.clone() });
            }
        }
        DegreeReport {
            breakpoints: self.breakpoints.iter().copied().filter(|b| *b > lo && *b <= hi).collect(),
            intervals,
            per_point: self
                .per_point
                .iter()
                .map(|p| PointRow { invariants: p.invariants.clone(), in_crit_minus: keep.iter().map(|n| p.in_crit_minus[*n]).collect() })
                .collect(),
        }
    }

    pub fn any_solvable(&self) -> bool {
        self.intervals.iter().any(|i| i.solvable)
    }
}

/// Degrees on the open intervals between consecutive breakpoints in `(0, 1]`.
pub fn degree_profile(table: &[LocalInvariants]) -> Result<DegreeReport> {
    let breakpoints: Vec<f64> = compute_t(table).into_iter().filter(|b| *b > 0.0 && *b <= 1.0).collect();
    let mut edges = vec![0.0];
    edges.extend(&breakpoints);
    let closed_right = breakpoints.last().is_none_or(|b| *b < 1.0);
    if closed_right {
        edges.push(1.0);
    }
    let mut intervals = Vec::new();
    let mut members: Vec<Vec<bool>> = vec![Vec::new(); table.len()];
    for w in edges.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        let t = 0.5 * (lo + hi);
        let d = degree_at(table, t)?;
        let minus = crit_minus(table, t)?;
        for (i, p) in table.iter().enumerate() {
            members[i].push(minus.iter().any(|m| std::ptr::eq(*m, p)));
        }
        intervals.push(DegreeInterval { t_lo: lo, t_hi: hi, closed_right: closed_right && hi == 1.0, degree: d, solvable: d != 0 });
    }
    let per_point = table.iter().cloned().zip(members).map(|(invariants, in_crit_minus)| PointRow { invariants, in_crit_minus }).collect();
    Ok(DegreeReport { breakpoints, intervals, per_point })
}

/// Critical points and invariants of one spec.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub spec: CurvatureSpec,
    pub records: Vec<CriticalRecord>,
    pub table: Vec<LocalInvariants>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisOptions {
    pub n_starts: usize,
    pub seed: u64,
    pub invariants: InvariantOptions,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions { n_starts: DEFAULT_STARTS, seed: 0, invariants: InvariantOptions::default() }
    }
}

impl Analysis {
    pub fn run(spec: &CurvatureSpec, opts: &AnalysisOptions) -> Result<Analysis> {
        let records = find_critical_points(spec, opts.n_starts, opts.seed)?;
        let table = invariant_table(spec, &records, &opts.invariants)?;
        Ok(Analysis { spec: spec.clone(), records, table })
    }

    pub fn degree_at(&self, t: f64) -> Result<i64> {
        degree_at(&self.table, t)
    }

    pub fn profile(&self) -> Result<DegreeReport> {
        degree_profile(&self.table)
    }

    pub fn breakpoints(&self) -> Vec<f64> {
        compute_t(&self.table)
    }
}
