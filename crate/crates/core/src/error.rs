use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid shape: {0}")]
    InvalidShape(String),

    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: String, found: String },

    #[error("non-finite value at index {index} ({context})")]
    NonFinite { index: usize, context: &'static str },

    #[error("kernel offset {offset} does not fit axis {axis} of extent {extent}")]
    OffsetOutOfRange { axis: usize, offset: isize, extent: usize },

    #[error("duplicate kernel offset {0:?}")]
    DuplicateOffset(Vec<isize>),

    #[error("kernel must be real-valued (entry {index} has imaginary part {imag:e})")]
    NotReal { index: usize, imag: f64 },

    #[error("grid of {size} cells exceeds the dense-oracle cap of {cap}")]
    OracleCap { size: usize, cap: usize },

    #[error("format error: {0}")]
    Format(String),

    #[error("{path}:{line}: {message}")]
    Config {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("step {step}: {source}")]
    AtStep {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True when the error is (or wraps) a numerical-domain failure.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::NonFinite { .. } => true,
            Error::AtStep { source, .. } => source.is_numerical(),
            _ => false,
        }
    }

    /// True when the error is (or wraps) an I/O failure.
    pub fn is_io(&self) -> bool {
        match self {
            Error::Io(_) => true,
            Error::AtStep { source, .. } => source.is_io(),
            _ => false,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
