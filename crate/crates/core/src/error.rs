use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("basis/parameter mismatch: {0}")]
    BasisMismatch(String),

    #[error("dimension {dim} exceeds dense threshold {threshold}; use the time-dependent propagator")]
    AboveDenseThreshold { dim: usize, threshold: usize },

    #[error("time {t} ns outside schedule domain [0, {t_final}]")]
    OutsideSchedule { t: f64, t_final: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error(transparent)]
    Config(#[from] crate::scenarios::config::ConfigError),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
