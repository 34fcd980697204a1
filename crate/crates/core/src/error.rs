use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("point {point:?} lies outside the chart {lo:?}..{hi:?}")]
    Domain {
        point: [f64; 2],
        lo: [f64; 2],
        hi: [f64; 2],
    },
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("solver failed: {message} (after {} iterations, last residual {:.3e})",
        .residual_history.len(),
        .residual_history.last().copied().unwrap_or(f64::NAN))]
    Solver {
        message: String,
        residual_history: Vec<f64>,
    },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;
