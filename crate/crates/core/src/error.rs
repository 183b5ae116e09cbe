use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("specification violated: {0}")]
    SpecViolation(String),

    #[error("coefficient Q is not positive (min sampled value {min:e} at x = {x})")]
    NonpositiveQ { min: f64, x: f64 },

    #[error("{what} did not converge after {iterations} iterations (last residual {residual:e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    #[error("U'(2) = {derivative:e} exceeds tolerance {tolerance:e}; Q is not even and 2-periodic or the solve is too loose")]
    SymmetryViolation { derivative: f64, tolerance: f64 },

    #[error("solution basis is degenerate at x = {x}")]
    DegenerateBasis { x: f64 },

    #[error("quadrature under-resolved on ({lo}, {hi})")]
    QuadratureUnderResolved { lo: f64, hi: f64 },

    #[error("values of u are not comparable: ratio {ratio} exceeds C' = {bound}")]
    ComparabilityViolation { ratio: f64, bound: f64 },

    #[error("derivative sign pattern breaks at node {index}")]
    SignViolation { index: usize },

    #[error("F(t) left the box in coordinate {index}: target {target:e} outside ({lo}, {hi}]")]
    BoxEscape {
        index: usize,
        target: f64,
        lo: f64,
        hi: f64,
    },

    #[error("no admissible m found below the cap {cap}")]
    SearchExhausted { cap: u64 },

    #[error("component count changes under refinement ({coarse} vs {fine})")]
    UnderResolved { coarse: usize, fine: usize },

    #[error("ODE integration failed at x = {x}: {reason}")]
    Integration { x: f64, reason: &'static str },

    #[error("invalid configuration at `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("missing artifact `{artifact}`; run the `{stage}` stage first")]
    MissingArtifact { artifact: String, stage: String },

    #[error("csv: {0}")]
    Csv(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config { field: field.into(), message: message.into() }
    }
}
