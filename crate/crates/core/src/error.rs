use thiserror::Error;

/// Errors returned by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value at index {0}")]
    NonFinite(usize),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("structure does not belong to the {family} family: {reason}")]
    InvalidStructure { family: String, reason: String },

    #[error("enumeration of {projected} structures exceeds the cap of {cap}")]
    CapExceeded { projected: u128, cap: u128 },

    #[error("{operation} is not supported for the {family} family")]
    Unsupported { family: String, operation: String },

    #[error("exact selection unavailable for the {family} family: {reason}")]
    ExactUnavailable { family: String, reason: String },

    #[error("constants rejected: {0}")]
    Constants(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Config(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::InvalidInput(e.to_string())
    }
}

pub(crate) fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::NonFinite(i)),
        None => Ok(()),
    }
}

pub(crate) fn check_len(values: &[f64], expected: usize) -> Result<()> {
    if values.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            got: values.len(),
        });
    }
    Ok(())
}
