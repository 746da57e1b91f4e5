use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("matrix is not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("parameter error: {0}")]
    Parameter(String),

    #[error("domain error at s = {s}: {message}")]
    Domain { s: f64, message: String },

    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },

    #[error("no admissible finite-difference step: {0}")]
    DegenerateDirection(String),

    #[error("range error: {0}")]
    Range(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
