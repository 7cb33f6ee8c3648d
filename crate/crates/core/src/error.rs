use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on an argument was not met.
    #[error("contract violation: {0}")]
    Contract(String),

    /// A model was evaluated outside the region where it is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// A text input could not be parsed. `line` is 1-based; 0 means the whole input.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Not enough data to carry out the requested operation.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: msg.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
