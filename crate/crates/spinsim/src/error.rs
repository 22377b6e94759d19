use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum SpinSimError {
    #[error("unknown spin label `{0}`")]
    UnknownSpin(String),

    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("negative duration {0} s")]
    NegativeDuration(f64),

    #[error("invalid spin system: {0}")]
    InvalidSystem(String),

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("parse error at offset {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("unresolved tau: program uses symbolic delays but no tau is defined (J = 0?)")]
    UnresolvedTau,

    #[error("inconclusive result: spin-A polarization {polarization:.3e} below threshold {threshold:.3e}")]
    Inconclusive { polarization: f64, threshold: f64 },

    #[error("fit failure: {0}")]
    FitFailure(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("spectral windows overlap: line separation {separation_hz} Hz too small for window of {window_bins} bins at {bin_hz} Hz/bin")]
    WindowOverlap {
        separation_hz: f64,
        window_bins: usize,
        bin_hz: f64,
    },

    #[error("singular linear inversion: {0}")]
    SingularInversion(String),
}

pub type Result<T> = std::result::Result<T, SpinSimError>;
