use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("coordinate out of range: {0}")]
    CoordinateOutOfRange(String),

    #[error("{what}: estimated {estimate} vertices exceeds budget {budget}")]
    BudgetExceeded {
        what: String,
        estimate: u128,
        budget: u64,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-canonical address: {0}")]
    NonCanonical(String),

    #[error("solver did not converge after {iterations} iterations (relative residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("flow violates its declared divergence: {0}")]
    Conservation(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn budget(what: impl Into<String>, estimate: u128, budget: u64) -> Self {
        Error::BudgetExceeded {
            what: what.into(),
            estimate,
            budget,
        }
    }
}
