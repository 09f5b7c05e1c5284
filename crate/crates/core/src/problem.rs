//! JSON problem files and the bundled example problems.
//!
//! ```json
//! {
//!   "polynomial": [{"powers": [0, 2, 0, 0], "coeff": 6.0}],
//!   "perturbation_polynomial": [{"powers": [0, 0, 0, 0], "coeff": -13.0}],
//!   "bumps": [{"center": [0.5, 0.5, 0.5, 0.5], "radius": 0.5, "amplitude": 1.0}],
//!   "s": 0.001,
//!   "t_range": [0.0, 1.0],
//!   "options": {"tol": 1e-6, "n_starts": 512, "seed": 0, "angular_degree": 31}
//! }
//! ```
//!
//! `polynomial` is `K`; the perturbation polynomial and the bumps together form
//! `h`, entering as `k + s·h` with `k = (K − 6)/6`.

use serde::{Deserialize, Serialize};

use crate::critical::{DEFAULT_STARTS, MIN_STARTS};
use crate::curvature::{AmbientPoly, BumpFunction, CurvatureSpec};
use crate::degree::AnalysisOptions;
use crate::error::{Error, Result};
use crate::geometry::SpherePoint;
use crate::invariants::InvariantOptions;
use crate::pv::PvOptions;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub powers: [u32; 4],
    pub coeff: f64,
}

fn terms_of(p: &AmbientPoly) -> Vec<Term> {
    p.terms().iter().map(|(e, c)| Term { powers: *e, coeff: *c }).collect()
}

fn poly_of(t: &[Term]) -> AmbientPoly {
    AmbientPoly::new(t.iter().map(|t| (t.powers, t.coeff)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemOptions {
    /// Absolute tolerance of the principal-value integrals.
    pub tol: f64,
    pub n_starts: usize,
    pub seed: u64,
    /// Exactness degree of the fine angular rule.
    pub angular_degree: usize,
}

impl Default for ProblemOptions {
    fn default() -> Self {
        let pv = PvOptions::default();
        ProblemOptions { tol: pv.tol, n_starts: DEFAULT_STARTS, seed: 0, angular_degree: pv.angular_degree }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub polynomial: Vec<Term>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation_polynomial: Option<Vec<Term>>,
    #[serde(default)]
    pub bumps: Vec<BumpFunction>,
    #[serde(default)]
    pub s: f64,
    /// `(lo, hi]` within `(0, 1]`.
    #[serde(default = "full_range")]
    pub t_range: [f64; 2],
    #[serde(default)]
    pub options: ProblemOptions,
}

fn full_range() -> [f64; 2] {
    [0.0, 1.0]
}

impl ProblemFile {
    pub fn from_spec(spec: &CurvatureSpec) -> ProblemFile {
        ProblemFile {
            polynomial: terms_of(&spec.base),
            perturbation_polynomial: spec.poly_perturbation.as_ref().map(terms_of),
            bumps: spec.bump_perturbations.clone(),
            s: spec.s,
            t_range: full_range(),
            options: ProblemOptions::default(),
        }
    }

    pub fn parse(text: &str) -> Result<ProblemFile> {
        let p: ProblemFile = serde_json::from_str(text).map_err(|e| Error::Invalid(format!("problem file: {e}")))?;
        p.validate()?;
        Ok(p)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("problem files serialize")
    }

    fn validate(&self) -> Result<()> {
        let [lo, hi] = self.t_range;
        if !(0.0 <= lo && lo < hi && hi <= 1.0) {
            return Err(Error::Invalid(format!("t_range [{lo}, {hi}] is not a subinterval of (0, 1]")));
        }
        if self.options.n_starts < MIN_STARTS {
            return Err(Error::Invalid(format!("n_starts must be at least {MIN_STARTS}")));
        }
        if !(self.options.tol > 0.0) {
            return Err(Error::Invalid("tol must be positive".into()));
        }
        for b in &self.bumps {
            BumpFunction::new(b.center, b.radius, b.amplitude)?;
        }
        Ok(())
    }

    /// The spec without the positivity check.
    pub fn spec_unchecked(&self) -> CurvatureSpec {
        let mut spec = CurvatureSpec::new(poly_of(&self.polynomial));
        if let Some(p) = &self.perturbation_polynomial {
            spec = spec.with_poly_perturbation(poly_of(p), self.s);
        }
        spec.with_bumps(self.bumps.clone(), self.s)
    }

    /// The spec, checked for `1 + k + s·h > 0`.
    pub fn spec(&self) -> Result<CurvatureSpec> {
        self.validate()?;
        self.spec_unchecked().checked()
    }

    pub fn pv_options(&self) -> PvOptions {
        let deg = self.options.angular_degree.max(11);
        PvOptions { tol: self.options.tol, angular_degree: deg, coarse_angular_degree: (deg * 3 / 4).max(11), ..PvOptions::default() }
    }

    pub fn analysis_options(&self) -> AnalysisOptions {
        AnalysisOptions {
            n_starts: self.options.n_starts,
            seed: self.options.seed,
            invariants: InvariantOptions { pv: self.pv_options(), frame_seed: self.options.seed },
        }
    }
}

/// Names of the bundled problems.
pub const BUILTIN: [&str; 9] =
    ["k1", "k2", "k3", "linear", "k2_plus_bump", "k2_minus_bump", "perturbed_s0.001", "perturbed_s0.01", "perturbed_bump"];

/// `7(1 − X₂²)² − 20(1 − X₂²)³`, expanded.
pub fn perturbation_polynomial() -> AmbientPoly {
    AmbientPoly::new([([0, 0, 0, 0], -13.0), ([0, 2, 0, 0], 46.0), ([0, 4, 0, 0], -53.0), ([0, 6, 0, 0], 20.0)])
}

/// Unit bump at `(½, ½, ½, ½)` of chordal radius ½; at chordal distance 1 from every `±Eᵢ`.
pub fn standard_bump() -> BumpFunction {
    BumpFunction::new(SpherePoint::from_array([0.5; 4]).expect("unit vector"), 0.5, 1.0).expect("valid bump")
}

fn quadratic(c1: f64) -> AmbientPoly {
    AmbientPoly::diagonal_quadratic([c1, 6.0, 7.0, 8.0])
}

/// Curvature spec of a bundled problem.
pub fn builtin_spec(name: &str) -> Option<CurvatureSpec> {
    let k2 = || CurvatureSpec::new(quadratic(3.0));
    Some(match name {
        "k1" => CurvatureSpec::new(quadratic(2.0)),
        "k2" => k2(),
        "k3" => CurvatureSpec::new(quadratic(4.0)),
        "linear" => CurvatureSpec::new(AmbientPoly::new([([0; 4], 2.0), ([1, 0, 0, 0], 1.0)])),
        "k2_plus_bump" => k2().with_bumps(vec![standard_bump()], 0.01),
        "k2_minus_bump" => k2().with_bumps(vec![standard_bump()], -0.01),
        "perturbed_s0.001" => k2().with_poly_perturbation(perturbation_polynomial(), 0.001),
        "perturbed_s0.01" => k2().with_poly_perturbation(perturbation_polynomial(), 0.01),
        "perturbed_bump" => k2().with_poly_perturbation(perturbation_polynomial(), 0.001).with_bumps(vec![standard_bump()], 0.001),
        _ => return None,
    })
}

pub fn builtin(name: &str) -> Option<ProblemFile> {
    builtin_spec(name).map(|s| ProblemFile::from_spec(&s))
}
