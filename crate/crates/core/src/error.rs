use thiserror::Error;

/// Errors raised by the library. Verification failures are not errors; they
/// are reported as entries of a [`crate::verifier::VerifyReport`].
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid alpha profile: {0}")]
    InvalidAlpha(String),

    #[error("invalid cache allocation: {0}")]
    InvalidAllocation(String),

    #[error("sublibrary index {index} out of range 1..={files}")]
    SublibraryOutOfRange { index: usize, files: usize },

    #[error("invalid demand vector: {0}")]
    InvalidDemand(String),

    #[error("malformed grouping input: subfile {subfile} has overlap {found} with the demand set, expected {expected}")]
    MalformedGroupInput {
        subfile: String,
        found: usize,
        expected: usize,
    },

    #[error("negative rate {rate} at level {level}")]
    NegativeRate { level: usize, rate: f64 },

    #[error("rate and channel vectors differ in length ({rates} vs {gains})")]
    LengthMismatch { rates: usize, gains: usize },

    #[error("demand enumeration of {count} vectors exceeds the limit of {limit}; raise the limit or enable sampling")]
    EnumerationTooLarge { count: u128, limit: u64 },

    #[error("invalid sweep specification: {0}")]
    InvalidSweep(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
