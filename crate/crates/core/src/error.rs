use thiserror::Error;

/// Errors raised by the copula construction, estimation and simulation routines.
#[derive(Debug, Error)]
pub enum Error {
    /// The caller supplied arguments outside the documented domain.
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// A numerical procedure broke down (overflow, failed bracket, degenerate grid, ...).
    #[error("numerical failure: {0}")]
    Numerical(String),
    /// An iterative solver hit its iteration budget.
    #[error("no convergence after {iterations} iterations: {reason}")]
    NoConvergence { iterations: usize, reason: String },
    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    /// True for errors caused by the caller's input rather than by numerics.
    pub fn is_input_error(&self) -> bool {
        matches!(self, Error::InvalidInput(_) | Error::Serde(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
