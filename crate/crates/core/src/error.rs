use thiserror::Error;

/// Errors raised across the library.
///
/// Variants split into two families that the CLI maps onto exit codes:
/// input problems (bad documents, bad arguments, unsupported requests) and
/// numerical failures (non-convergence, precision refusals, missing brackets).
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("document error at `{path}`: {message}")]
    Document { path: String, message: String },

    #[error("invalid constellation: {0}")]
    InvalidConstellation(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("index {index} out of range for {len} points")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("constellation has no bit labels")]
    MissingLabels,

    #[error("insufficient precision: {0}")]
    InsufficientPrecision(String),

    #[error("root not bracketed: {0}")]
    NotBracketed(String),

    #[error("did not converge: {0}")]
    NonConvergence(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn doc(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Document {
            path: path.into(),
            message: message.into(),
        }
    }

    /// True for failures of the numerics rather than of the input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::InsufficientPrecision(_) | Error::NotBracketed(_) | Error::NonConvergence(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
