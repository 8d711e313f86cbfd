use std::io;

use thiserror::Error;

/// Errors produced by the codecs and container formats.
#[derive(Debug, Error)]
pub enum Error {
    /// A byte stream does not follow its layout.
    #[error("format error at byte {offset}: {reason}")]
    Format { offset: usize, reason: String },

    /// A byte stream ended before its declared payload did.
    #[error("truncated input: expected {expected} bytes, found {actual}")]
    Truncated { expected: usize, actual: usize },

    /// A parameter is outside what the codec supports (e.g. a bitwidth).
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A value lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Operand dimensions do not agree.
    #[error("shape error: {0}")]
    Shape(String),

    /// An invalid configuration (mask, strategy, method string).
    #[error("config error: {0}")]
    Config(String),

    /// An operation was called on the wrong kind of input.
    #[error("usage error: {0}")]
    Usage(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn format(offset: usize, reason: impl Into<String>) -> Self {
        Error::Format {
            offset,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
