use std::io;

use dpmkit::batch::BatchError;
use dpmkit::metrics::MetricsError;
use dpmkit::{ArchiveError, QueryError, SimError};
use thiserror::Error;

/// Every failure maps to one stable exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, config keys or values.
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Runtime(String),
    /// A readable input of the wrong format, version or shape.
    #[error("{0}")]
    Schema(String),
    /// Damaged or truncated input.
    #[error("{0}")]
    Corrupt(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Runtime(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Schema(_) => 3,
            CliError::Corrupt(_) => 4,
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<ArchiveError> for CliError {
    fn from(e: ArchiveError) -> Self {
        let msg = e.to_string();
        match e {
            ArchiveError::Io(_) => CliError::Runtime(msg),
            ArchiveError::BadMagic | ArchiveError::UnsupportedVersion { .. } | ArchiveError::UnsupportedConvention(_) => {
                CliError::Schema(msg)
            }
            _ => CliError::Corrupt(msg),
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::InvalidSpec(_) => CliError::Usage(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<QueryError> for CliError {
    fn from(e: QueryError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<BatchError> for CliError {
    fn from(e: BatchError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        let msg = e.to_string();
        match e {
            MetricsError::LengthMismatch(..)
            | MetricsError::DimensionMismatch(_)
            | MetricsError::Parse { .. }
            | MetricsError::InvalidTrajectory(_) => CliError::Schema(msg),
            _ => CliError::Runtime(msg),
        }
    }
}
