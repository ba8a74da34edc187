//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Matrix/vector dimensions do not line up.
    #[error("dimension mismatch: {0}")]
    Shape(String),

    /// A text input could not be parsed; carries the 1-based line number.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// Structural problem in an input (cycles, dangling ids, bad magic, ...).
    #[error("format error: {0}")]
    Format(String),

    /// Invalid configuration value.
    #[error("config error: {0}")]
    Config(String),

    /// Inputs that parse but cannot be ingested together (unknown term ids,
    /// misaligned protein sets, ...).
    #[error("ingestion error: {0}")]
    Ingest(String),

    /// Row order or id sets of two tables disagree.
    #[error("alignment error: {0}")]
    Alignment(String),

    /// Numerical breakdown (NaN/inf loss, non-finite objective).
    #[error("numeric error: {0}")]
    Numeric(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }
}
