use thiserror::Error;

use crate::sync::StabilityReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    /// A component of `A·s` sits exactly on a fold breakpoint, so the slope is undefined.
    #[error("fold breakpoint hit on component {component}; Jacobian is undefined")]
    DegenerateJacobian { component: usize },

    #[error("insufficient data: need at least {needed}, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("coupling is outside the synchronization region: {0:?}")]
    UnstableCoupling(StabilityReport),

    #[error("no linear scaling region found in correlation sums")]
    NoScalingRegion,

    #[error("frequency {frequency} lies inside the guard band of a ZOH null")]
    ZohNull { frequency: f64 },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("both symbol classes must be present")]
    SingleClass,

    #[error("symbol class {class} has zero spread")]
    ZeroSpread { class: u8 },

    #[error("classes are not separated (mu0 = {mu0}, mu1 = {mu1})")]
    ClassesNotSeparated { mu0: f64, mu1: f64 },

    #[error("degenerate fit: {0}")]
    DegenerateFit(&'static str),

    #[error("malformed data at bit {bit_offset}: {reason}")]
    Format { bit_offset: usize, reason: String },

    #[error("CRC mismatch: stored {stored:#010x}, computed {computed:#010x} (payload ends at bit {bit_offset})")]
    CrcMismatch {
        stored: u32,
        computed: u32,
        bit_offset: usize,
    },

    #[error("payload of {payload_bits} bits at {bit_rate} b/s exceeds link capacity ({capacity} b/s)")]
    LinkCapacity {
        payload_bits: usize,
        bit_rate: f64,
        capacity: f64,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("wav: {0}")]
    Wav(#[from] hound::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, value: f64, reason: &'static str) -> Self {
        Error::InvalidParameter {
            name,
            value,
            reason,
        }
    }
}
