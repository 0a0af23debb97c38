use thiserror::Error;

/// Errors raised by the estimation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum IsingError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid spin value {value} at row {row}, column {col} (expected -1 or +1)")]
    InvalidSpin { row: usize, col: usize, value: i64 },

    #[error("exact enumeration supports at most {max} nodes, got {k}")]
    Capacity { k: usize, max: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("solution path is empty")]
    EmptyPath,

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, IsingError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(IsingError::InvalidArgument(msg.into()))
}
