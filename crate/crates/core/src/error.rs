use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The node has no self-weight, so its own features cannot move its embedding.
    #[error("node {0} is immobile (zero self-weight)")]
    NodeImmobile(usize),

    #[error("degenerate classifier: parameter vector has zero norm")]
    DegenerateClassifier,

    /// Signals a bug: a guarantee of the response model was violated.
    #[error("internal invariant violated: {0}")]
    InternalInvariant(String),

    #[error("training failed: {0}")]
    TrainingFailure(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
