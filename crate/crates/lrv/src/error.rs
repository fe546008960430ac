use thiserror::Error;

/// Errors produced by estimators, oracles and generators in this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite observation at position {index}")]
    NonFinite { index: usize },

    #[error("index out of range: ({i}, {j}) for sample size {n}")]
    IndexOutOfRange { i: usize, j: usize, n: usize },

    #[error("empty input")]
    EmptyInput,

    #[error("bandwidth {bandwidth} out of range for sample size {n}")]
    BandwidthOutOfRange { bandwidth: usize, n: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("forced schedule violates the unit-increment contract at n = {n}")]
    InvalidSchedule { n: u64 },

    #[error("degenerate scale: {0}")]
    DegenerateScale(String),

    #[error("insufficient data: have {have}, need {need}")]
    InsufficientData { have: usize, need: usize },

    #[error("unsupported regime: {0}")]
    UnsupportedRegime(String),

    #[error("model error: {0}")]
    Model(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_finite(x: f64, index: usize) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite { index })
    }
}
