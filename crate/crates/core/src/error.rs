use thiserror::Error;

use crate::domain::Interval;

/// Errors produced by the mechanism library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("value {value} lies outside {domain}")]
    OutOfDomain { value: f64, domain: Interval },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid density: {0}")]
    InvalidDensity(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("unknown mechanism `{0}`")]
    UnknownMechanism(String),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("dataset error: {0}")]
    Dataset(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("degenerate estimate: {0}")]
    Degenerate(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        if err.is_io_error() {
            Error::Io(err.to_string())
        } else {
            Error::Dataset(err.to_string())
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

/// Rejects non-finite or non-positive privacy parameters.
pub(crate) fn check_epsilon(epsilon: f64) -> Result<f64> {
    if epsilon.is_finite() && epsilon > 0.0 {
        Ok(epsilon)
    } else {
        Err(Error::InvalidParameter(format!(
            "epsilon must be positive and finite, got {epsilon}"
        )))
    }
}
