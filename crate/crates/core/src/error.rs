use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("truncation error {error:e} exceeds budget {budget:e}")]
    TruncationBudget { error: f64, budget: f64 },

    #[error("optimizer did not converge within {evaluations} evaluations")]
    OptimizerBudget { evaluations: usize },

    #[error("no sample satisfies the conditioning event")]
    NoQualifyingSamples,

    #[error("grid mismatch: expected {expected} points, got {got}")]
    GridMismatch { expected: usize, got: usize },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, value: f64, reason: &'static str) -> Self {
        Error::InvalidParameter {
            name,
            value,
            reason,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
