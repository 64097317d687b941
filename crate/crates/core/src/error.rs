use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid ensemble parameters: {0}")]
    InvalidSpec(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("resample index k = {k} outside 0..={max}")]
    KOutOfRange { k: u64, max: u64 },

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("index {index} out of range for size {n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("dense cap exceeded: n = {n} > cap = {cap}")]
    DenseCapExceeded { n: usize, cap: usize },

    #[error("eigensolver did not converge after {iterations} matvecs (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("linear solver breakdown: {0}")]
    SolverBreakdown(String),

    #[error("spectral parameter must have positive imaginary part, got {0}")]
    NonPositiveImaginary(f64),

    #[error("branch tracking failed near z = {re} + {im}i")]
    BranchTracking { re: f64, im: f64 },

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("config validation failed: {}", .0.join("; "))]
    Config(Vec<String>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
