//! Error type shared by the distribution, measure, envelope and harness layers.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, RiskError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RiskError {
    #[error("empty input")]
    EmptyInput,

    #[error("non-finite value in {0}")]
    NonFiniteValue(&'static str),

    #[error("all weights are zero")]
    AllZeroWeights,

    #[error("{what} out of range: {value}")]
    OutOfRange { what: &'static str, value: f64 },

    #[error("copy count must be a positive integer, got {0}")]
    NonIntegerCopies(f64),

    #[error("budget too small: {0}")]
    BudgetTooSmall(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("infeasible family: {0}")]
    InfeasibleFamily(String),

    #[error("infeasible part {index}: {reason}")]
    InfeasiblePart { index: usize, reason: String },

    #[error("density is not in the envelope (worst excess {excess:e})")]
    NotInEnvelope { excess: f64 },

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
}

impl RiskError {
    pub(crate) fn out_of_range(what: &'static str, value: f64) -> Self {
        RiskError::OutOfRange { what, value }
    }
}
