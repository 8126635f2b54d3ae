//! Crate-wide error type.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A file did not conform to its expected layout. `line` is 1-based and
    /// counts the header.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// A configuration value violated a module invariant.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Constructed data violated a type invariant.
    #[error("invariant violated: {0}")]
    Invariant(String),

    /// Index range out of bounds.
    #[error("range {from}..{to} out of bounds for length {len}")]
    Bounds { from: usize, to: usize, len: usize },

    /// Tensor or parameter dimensions do not match.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// An operation needed more data than it was given.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// Training data contained a single class.
    #[error("training data contains only class {0}; both classes are required")]
    SingleClass(u8),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse { line, message: message.into() }
    }
}
