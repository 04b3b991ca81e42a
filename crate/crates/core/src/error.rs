use thiserror::Error;

/// Failure modes shared by all modules.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("regime violation: {0}")]
    Regime(String),

    #[error("outside validity region: {0}")]
    Validity(String),

    #[error("inner solver did not converge after {iterations} iterations (residual {residual:e})")]
    NonConverged {
        iterations: usize,
        residual: f64,
        best: Vec<f64>,
    },

    /// `best` is the best iterate available when the budget check fired.
    #[error("iteration budget exceeded: requested {requested}, cap {cap}")]
    Budget { requested: u64, cap: u64, best: Vec<f64> },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
