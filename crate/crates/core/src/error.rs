use thiserror::Error;

/// Errors raised by model constructors and the checked operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A model parameter violates its invariant. `name` is the parameter's
    /// key within its module namespace (e.g. `rate`, `v_on`).
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("holder motion must be non-negative, got {0} µm")]
    NegativeMotion(f64),

    #[error("nibble out of range: {0} (expected 0..=15)")]
    NibbleOutOfRange(u8),

    #[error("wear rate must be positive, got {0} µm/s")]
    NonPositiveRate(f64),

    #[error("tick {tick} is not a sample instant (period {period} ticks)")]
    NotSampleInstant { tick: u64, period: u64 },

    #[error("unknown trace column `{0}`")]
    UnknownColumn(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
