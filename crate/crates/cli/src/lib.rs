//! Command implementations behind the `truwb` binary.
//!
//! Exit codes: 0 success, 1 configuration error, 2 I/O error, 3 numeric failure.

pub mod commands;
pub mod output;
pub mod sweep;

use std::fmt;

use truwb_core::Error;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(String),
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Io(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }

    /// Classifies a core error raised while reading or decoding a file.
    pub fn io(context: impl fmt::Display, err: impl fmt::Display) -> Self {
        CliError::Io(format!("{context}: {err}"))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Numeric(m) => write!(f, "numeric failure: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(err: Error) -> Self {
        match err {
            Error::InvalidParameter { .. }
            | Error::UnrepresentablePulse { .. }
            | Error::DurationTooShort { .. }
            | Error::ChannelTooLong { .. }
            | Error::RateMismatch { .. } => CliError::Config(err.to_string()),
            e if e.is_io() => CliError::Io(e.to_string()),
            e => CliError::Numeric(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
