use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("parameters outside the admissible regime: {0}")]
    InvalidRegime(String),

    #[error("radial integration did not converge: error estimate {estimate:e} after {steps} steps (tolerance {tolerance:e})")]
    Solver { steps: usize, estimate: f64, tolerance: f64 },

    #[error("no sign change of the boundary mismatch for eigenvalues in [{lo:e}, {hi:e}]")]
    Bracket { lo: f64, hi: f64 },

    #[error("quadrature underresolved: {0}")]
    Resolution(String),

    #[error("term budget exceeded: {required} terms needed, budget {budget}")]
    Budget { required: u64, budget: u64 },

    #[error("methods disagree: {0}")]
    Consistency(String),

    #[error("|G| >= F at p = {p:?} (F = {f:e}, G = {g:e})")]
    WellDefinedness { p: [i64; 3], f: f64, g: f64 },

    #[error("singular coupling: the logarithm argument gives a vanishing denominator")]
    SingularCoupling,

    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("basis size {count} exceeds budget {budget}")]
    BasisSize { count: u64, budget: u64 },

    #[error("mode {0:?} is not in the basis")]
    UnknownMode([i64; 3]),

    #[error("unstable quadratic form: |G| = {g} >= F = {f}")]
    UnstableQuadratic { f: f64, g: f64 },

    #[error("eigensolver did not converge: residual {residual:e} after {iterations} iterations")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("region mismatch: expected {expected}, classified as {found}")]
    RegionMismatch { expected: String, found: String },
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
