use thiserror::Error;

use crate::expr::ParseError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error(transparent)]
    Parse(#[from] ParseError),

    /// A component evaluated to NaN or infinity. `component` is 0-based.
    #[error("evaluation failed in component {component}: {message}")]
    Eval { component: usize, message: String },

    #[error("non-finite value in input vector at index {0}")]
    NonFinite(usize),

    #[error("inner iteration did not converge after {iterations} steps (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("linear part is singular")]
    SingularLinearPart,

    #[error("bracket [{lower}, {upper}] does not enclose a root (values {at_lower:e}, {at_upper:e})")]
    BracketingFailure {
        lower: f64,
        upper: f64,
        at_lower: f64,
        at_upper: f64,
    },

    #[error("invalid inverse specification: {0}")]
    InvalidSpec(String),

    #[error("invalid set: {0}")]
    InvalidSet(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("sampling error: {0}")]
    Sampling(String),

    #[error("diagnostics error: {0}")]
    Diagnostics(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("problem file: {0}")]
    ProblemFile(String),
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
