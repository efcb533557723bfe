use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("vertex set is not good: {0}")]
    NotGoodSet(String),
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    #[error("singular matrix")]
    Singular,
    #[error("solver did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("green function column for vertex {0} was not computed")]
    MissingColumn(usize),
    #[error("odd or non-nilpotent element passed to exponential")]
    NotEvenNilpotent,
    #[error("grassmann generator index {index} out of range for {count} generators")]
    GeneratorOutOfRange { index: usize, count: usize },
    #[error("permutation is not bare: {0}")]
    NotBare(String),
    #[error("consistency check failed: {0}")]
    Consistency(String),
    #[error("point is outside the domain or coincides with another: {0}")]
    Domain(String),
}

pub type Result<T> = std::result::Result<T, Error>;
