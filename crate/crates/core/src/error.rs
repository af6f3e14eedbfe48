use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter lies outside its admissible range.
    #[error("{name} = {value} is out of range: {reason}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        reason: String,
    },

    /// A bound was evaluated outside the regime where it is valid.
    #[error("regime error for {param} = {value}: {reason}")]
    Regime {
        param: &'static str,
        value: f64,
        reason: String,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("joint dimension {requested} exceeds the cap of {cap}")]
    CapExceeded { requested: usize, cap: usize },

    #[error("invalid quantum state: {0}")]
    InvalidState(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("undersampled test set: {basis} basis has {available} matched positions, {required} required")]
    Undersampled {
        basis: &'static str,
        available: usize,
        required: usize,
    },

    #[error("passing probability is zero; no conditional state exists")]
    ZeroPassingProbability,

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Signals a bug rather than bad input.
    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn out_of_range(name: &'static str, value: f64, reason: impl Into<String>) -> Self {
        Error::OutOfRange {
            name,
            value,
            reason: reason.into(),
        }
    }

    pub(crate) fn regime(param: &'static str, value: f64, reason: impl Into<String>) -> Self {
        Error::Regime {
            param,
            value,
            reason: reason.into(),
        }
    }
}
