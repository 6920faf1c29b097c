use thiserror::Error;

use crate::energy::SolveReport;

/// Errors produced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter or input violated a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The request would exceed the memory or size budget.
    #[error("resource limit: {0}")]
    Resource(String),

    /// An internal invariant failed to hold after construction.
    #[error("invariant violated: {0}")]
    Invariant(String),

    /// An iterative solve stopped at its iteration cap. The last iterate is kept.
    #[error("solver did not converge after {} iterations (optimality {:.3e})", .0.iterations, .0.final_optimality)]
    NotConverged(Box<SolveReport>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
