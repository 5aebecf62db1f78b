use thiserror::Error;

/// Errors raised by `unceval` operations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("length mismatch: {left_name} has {left} entries but {right_name} has {right}")]
    LengthMismatch {
        left_name: &'static str,
        left: usize,
        right_name: &'static str,
        right: usize,
    },

    #[error("non-finite {what} at index {index}")]
    NonFinite { what: &'static str, index: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("insufficient data: {0}")]
    Insufficient(String),

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("duplicate identifier: {0}")]
    Duplicate(String),

    #[error("ragged trials: {0}")]
    RaggedTrials(String),

    #[error("missing prediction for pair ({user}, {item})")]
    MissingPrediction { user: String, item: String },

    #[error("unreachable target: {0}")]
    Unreachable(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
