use thiserror::Error;

/// Errors produced by the analytic and simulation routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("out of range: {0}")]
    OutOfRange(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    /// Adaptive quadrature ran out of subdivisions before meeting its
    /// tolerance. Carries the best estimate and its error bound.
    #[error(
        "quadrature did not converge: estimate {estimate:e}, error bound {error_bound:e} after {subdivisions} subdivisions"
    )]
    Accuracy {
        estimate: f64,
        error_bound: f64,
        subdivisions: usize,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
