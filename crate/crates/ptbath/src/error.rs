use thiserror::Error;

/// Errors produced by the simulation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("environment too large: {n_modes} modes (limit {limit})")]
    TooManyModes { n_modes: usize, limit: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("eigendecomposition failed for {dim}x{dim} matrix (max |entry| {max_abs:.3e}): {detail}")]
    Eigensolver {
        dim: usize,
        max_abs: f64,
        detail: String,
    },

    #[error("state not normalized: norm^2 deviates from 1 by {deviation:.3e} (tolerance {tolerance:.1e})")]
    NotNormalized { deviation: f64, tolerance: f64 },

    #[error("norm drift {drift:.3e} at t = {t:.6e} exceeds {limit:.1e}; reduce the step size")]
    NormDrift { t: f64, drift: f64, limit: f64 },

    #[error("sample times must be strictly ascending")]
    UnsortedTimes,

    #[error("invalid time grid: {0}")]
    InvalidGrid(String),

    #[error("invalid averaging window: {0}")]
    InvalidWindow(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
