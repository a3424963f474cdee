use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ShapeError {
    #[error("curve is not regular: min speed {min_speed:.3e} at {count} sample(s), threshold {threshold:.3e}")]
    Irregular {
        min_speed: f64,
        count: usize,
        threshold: f64,
    },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("{what} did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, ShapeError>;
