//! Error type shared by every module of the crate.

use thiserror::Error;

/// Errors raised by the engine.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    /// Input failed a documented precondition.
    #[error("invalid input: {0}")]
    Invalid(String),
    /// Text or JSON could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),
    /// The instance is outside what this engine supports.
    #[error("unsupported instance: {0}")]
    Unsupported(String),
    /// An internal consistency assertion failed.
    #[error("internal inconsistency: {0}")]
    Internal(String),
}

/// Convenience alias.
pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Invalid(msg.into()))
}
