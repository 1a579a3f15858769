use thiserror::Error;

/// Errors raised by the model, simulators and samplers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum HawkesError {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("invalid event sequence: {0}")]
    InvalidEvents(String),

    #[error("length mismatch: expected {expected} entries, got {got}")]
    Misaligned { expected: usize, got: usize },

    #[error("index {index} out of range for {len} events")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("insufficient data: need at least {needed}, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("non-finite posterior after updating block `{block}`")]
    NonFinitePosterior { block: &'static str },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("intensity ran away near t = {time}: consecutive events no longer separate")]
    Explosive { time: f64 },
}

pub type Result<T, E = HawkesError> = std::result::Result<T, E>;

pub(crate) fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(HawkesError::InvalidParameter {
            name,
            value,
            reason: "must be finite and > 0",
        })
    }
}

pub(crate) fn check_finite(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(HawkesError::InvalidParameter {
            name,
            value,
            reason: "must be finite",
        })
    }
}
