use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A vector or parameter lies outside the domain the model assumes
    /// (e.g. an arm with Euclidean norm above one).
    #[error("domain violation: {0}")]
    DomainViolation(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    /// A deterministic identity that must hold for a correct implementation
    /// failed. Never a statistical fluke.
    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("I/O error at {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
