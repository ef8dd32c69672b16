use std::path::PathBuf;

use fireline_core::FireError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("i/o on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Fire(#[from] FireError),
}

impl CliError {
    /// 2 for bad input, 3 for I/O, 4 for a failed self-check.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io { .. } => 3,
            CliError::Fire(FireError::Invariant(_)) => 4,
            CliError::Fire(_) => 2,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

pub(crate) fn bad<T>(msg: impl Into<String>) -> Result<T> {
    Err(CliError::Config(msg.into()))
}
