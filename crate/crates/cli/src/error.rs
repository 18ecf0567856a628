use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {message}", path.display())]
    Io { path: PathBuf, message: String },
    /// A solver ran out of iterations or a check missed its tolerance.
    #[error("{0}")]
    NotReached(String),
    #[error("invalid configuration: {0}")]
    Config(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } => 1,
            CliError::NotReached(_) => 2,
            CliError::Config(_) => 3,
        }
    }

    pub fn io(path: &Path, err: impl std::fmt::Display) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            message: err.to_string(),
        }
    }
}

/// Solver errors: running out of iterations maps to exit code 2, everything
/// else is a property of the inputs or flags.
impl From<otaccel::Error> for CliError {
    fn from(e: otaccel::Error) -> Self {
        match e {
            otaccel::Error::IterationLimit { .. }
            | otaccel::Error::BacktrackingExhausted { .. } => CliError::NotReached(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
