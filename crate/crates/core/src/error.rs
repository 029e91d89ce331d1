//! Error type shared by every module in the crate.

use thiserror::Error;

/// Failure modes surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Tensor or matrix dimensions do not satisfy an operation's contract.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A parameter value is outside its documented range.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// SNR-relative noise was requested for an identically zero signal.
    #[error("signal power is zero; SNR-relative noise level is undefined")]
    UndefinedSnr,

    /// An iterative linear solve did not reach its tolerance.
    #[error("linear solver did not converge: {0}")]
    SolverFailure(String),

    /// A non-finite value appeared in the solver state.
    #[error("non-finite value in {what} at iteration {iteration}")]
    NonFinite { iteration: usize, what: String },
}

pub type Result<T> = std::result::Result<T, Error>;
