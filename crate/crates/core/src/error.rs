use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("capacity exceeded: {what} needs {requested}, limit is {limit}")]
    Capacity {
        what: &'static str,
        requested: usize,
        limit: usize,
    },

    #[error("index out of range: {0}")]
    Index(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("operator is not Hermitian (max imaginary coefficient {0:e})")]
    NotHermitian(f64),

    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    IterationLimit { iterations: usize, residual: f64 },

    #[error("Lie closure exceeded {limit} elements (partial dimension {partial})")]
    ClosureCapacity { partial: usize, limit: usize },

    #[error("invalid model specification: {0}")]
    Spec(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
