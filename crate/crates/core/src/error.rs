use thiserror::Error;

/// Errors raised by the geometry, quadrature, and degree layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("point is antipodal to the chart center (<P, theta> = {dot})")]
    Antipode { dot: f64 },

    #[error("integrand is not integrable at the base point: {0}")]
    NonIntegrable(String),

    #[error("degenerate critical point at {location:?}: min |hessian eigenvalue| = {min_eig:e}")]
    DegenerateFunction { location: [f64; 4], min_eig: f64 },

    #[error("critical point search found no converged point ({starts} starts)")]
    NonConvergence { starts: usize },

    #[error("hessian is singular at {0:?}")]
    SingularHessian([f64; 4]),

    #[error("sign of the degree integrand is inconclusive at {location:?}: {reason}")]
    Inconclusive { location: [f64; 4], reason: String },

    #[error("t = {t} lies on the breakpoint {breakpoint}")]
    Breakpoint { t: f64, breakpoint: f64 },

    #[error("nondegeneracy condition fails at {0:?}")]
    NotNondegenerate(Vec<[f64; 4]>),

    #[error("fixed-point iteration for the reduced curve did not contract at mu = {mu}")]
    NoContraction { mu: f64 },

    #[error("no critical point qualifies for a blow-up curve")]
    EmptyMStar,

    #[error("spectrum index out of range: i + j = {0} < 2")]
    Domain(usize),

    #[error("curvature is not positive: 1 + k + s h = {value} at {location:?}")]
    NotPositive { location: [f64; 4], value: f64 },

    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// True for the errors that mean "the degree count is silent here" rather than failure.
    pub fn is_silent(&self) -> bool {
        matches!(self, Error::Inconclusive { .. } | Error::Breakpoint { .. } | Error::EmptyMStar)
    }
}
