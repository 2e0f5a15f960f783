use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("lex error at offset {offset}: {message}")]
    Lex { offset: usize, message: String },

    #[error("parse error at offset {offset}: expected {expected}")]
    Parse { offset: usize, expected: String },

    #[error("evaluation error in `{node}`: {reason}")]
    Eval { node: String, reason: String },

    #[error("cannot differentiate `{node}`: {reason}")]
    Diff { node: String, reason: String },

    #[error("out of range: {0}")]
    Range(String),

    #[error("characteristic trace failed: {0}")]
    Trace(String),

    #[error("invalid problem: {0}")]
    Validation(String),

    #[error("dense system of size {size} exceeds the configured limit {limit}")]
    Capacity { size: usize, limit: usize },

    #[error("spectrum computation failed: {0}")]
    Spectrum(String),

    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
