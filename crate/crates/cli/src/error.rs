use std::path::PathBuf;

use fracmax_core::FracError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),

    #[error("usage: {0}")]
    Usage(String),

    #[error("{path}: {reason}")]
    FieldFormat { path: PathBuf, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Numerics(#[from] FracError),

    #[error("{failed} of {total} checks failed")]
    ChecksFailed { failed: usize, total: usize },

    #[error("{failed} of {total} sweep solves failed")]
    SweepFailed { failed: usize, total: usize },
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    /// 1 parse or usage, 2 non-convergence, 3 I/O, 4 failed checks.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) | Self::Usage(_) | Self::FieldFormat { .. } => 1,
            Self::Numerics(FracError::NotConverged { .. } | FracError::NanInIterate { .. }) => 2,
            Self::Numerics(_) => 1,
            Self::SweepFailed { .. } => 2,
            Self::Io { .. } => 3,
            Self::ChecksFailed { .. } => 4,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
