use thiserror::Error;

use crate::scalar::InnerSolveTrace;

/// Errors raised by `divprox`.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch { context: String, expected: usize, found: usize },

    #[error("inner Newton solve did not converge after {} iterations (|psi'| = {:e})", .trace.iterations, .trace.residual)]
    SolverFailure { trace: InnerSolveTrace },

    #[error("factorization failed: {0}")]
    Factorization(String),

    #[error("schema error: {0}")]
    Schema(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

pub(crate) fn check_len(context: &str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { context: context.to_string(), expected, found })
    }
}
