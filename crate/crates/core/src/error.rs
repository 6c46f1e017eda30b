use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter set violates a configuration constraint.
    #[error("configuration error: {0}")]
    Config(String),
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// An operation was applied to an object in the wrong state.
    #[error("state error: {0}")]
    State(String),
    /// An internal invariant was violated.
    #[error("internal error: {0}")]
    Internal(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
