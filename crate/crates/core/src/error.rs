use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A coefficient file or descriptor string failed to parse.
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid space descriptor: {0}")]
    InvalidSpace(String),

    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("assignment shape does not match field: {0}")]
    ShapeMismatch(String),

    #[error("{nonzero} nonzero coefficients exceed the enumeration cap of {cap}")]
    CapExceeded { nonzero: usize, cap: usize },

    #[error("power space is undefined for q = inf")]
    PowerSpaceUndefined,

    /// The input carries no mass for the requested construction (for
    /// instance a root find against an identically zero curve).
    #[error("degenerate input: {0}")]
    Degenerate(&'static str),

    #[error("root find did not converge: {0}")]
    NoConvergence(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}
