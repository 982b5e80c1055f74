use thiserror::Error;

/// Errors raised by the simulation and analysis primitives.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("waveform has no samples")]
    EmptyWaveform,

    #[error("sample {index} is not finite")]
    NonFiniteSample { index: usize },

    #[error("rise time {rise_time:e} s is not representable at {sample_rate:e} S/s (needs more than one sample period)")]
    UnrepresentablePulse { rise_time: f64, sample_rate: f64 },

    #[error("pulse duration {duration:e} s is too short for rise time {rise_time:e} s")]
    DurationTooShort { duration: f64, rise_time: f64 },

    #[error("waveform has zero energy")]
    ZeroEnergy,

    #[error("sample rate mismatch: {left:e} S/s vs {right:e} S/s")]
    RateMismatch { left: f64, right: f64 },

    #[error("window [{start:e}, {end:e}] s lies outside the waveform support")]
    WindowOutsideSupport { start: f64, end: f64 },

    #[error("channel length {length:e} s exceeds the channel window {window:e} s")]
    ChannelTooLong { length: f64, window: f64 },

    #[error("bad magic bytes in trace file")]
    BadMagic,

    #[error("unsupported trace format version {0}")]
    UnsupportedVersion(u16),

    #[error("trace file truncated: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },

    #[error("invalid sample rate {0} in trace file")]
    InvalidRate(f64),

    #[error("CSV line {line}: {reason}")]
    Csv { line: usize, reason: String },

    #[error("CSV row {row} breaks uniform sample spacing")]
    NonUniformSpacing { row: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            reason: reason.into(),
        }
    }

    /// True for errors caused by reading or parsing persisted files.
    pub fn is_io(&self) -> bool {
        matches!(
            self,
            Error::Io(_)
                | Error::BadMagic
                | Error::UnsupportedVersion(_)
                | Error::Truncated { .. }
                | Error::InvalidRate(_)
                | Error::Csv { .. }
                | Error::NonUniformSpacing { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
