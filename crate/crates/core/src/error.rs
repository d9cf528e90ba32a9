//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    /// The requested center is outside the bound families the width
    /// formulas cover (zero, single-spike, or elliptic norm <= R/2).
    #[error("bounds unavailable for this center: {0}")]
    UnsupportedCenter(String),

    #[error("solver did not converge: {context} (best gap {best_gap:.3e})")]
    NonConvergence { context: String, best_gap: f64 },

    #[error("no fixed point in valid range: h({delta_max:.6e}) = {residual:.6e} < 0")]
    NoFixedPoint { delta_max: f64, residual: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("config error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParam(msg.into())
    }
}
