use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid configuration: {0}")]
    InvalidGrid(String),

    #[error("invalid quantizer: {0}")]
    InvalidQuantizer(String),

    #[error("non-finite value {0} cannot be quantized")]
    NonFinite(f64),

    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("invalid exponent {u}/{v}: {reason}")]
    InvalidExponent { u: u32, v: u32, reason: &'static str },

    #[error("degenerate polynomial: {0}")]
    DegeneratePolynomial(&'static str),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(
        "feasible set appears empty: residual stalled at {residual:.3e} after {iterations} inner iterations ({worst})"
    )]
    Infeasible {
        residual: f64,
        iterations: usize,
        worst: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
