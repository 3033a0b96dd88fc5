use thiserror::Error;

/// Errors produced by the modem library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("frame size mismatch: expected {expected} samples, got {got}")]
    FrameSize { expected: usize, got: usize },

    #[error("delay-Doppler grids do not match")]
    GridMismatch,

    #[error("length mismatch: {context} (expected {expected}, got {got})")]
    LengthMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("spread-pilot constraint violated: {0}")]
    SpreadConstraint(String),

    #[error("no frame detected: correlation peak {metric:.4} below threshold {threshold:.4}")]
    SyncNotFound { metric: f64, threshold: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("signal has zero power")]
    ZeroSignal,
}

pub type Result<T> = std::result::Result<T, Error>;
