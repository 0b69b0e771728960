use std::io;
use std::path::PathBuf;

use thiserror::Error;

use crate::config::ConfigError;
use crate::pgm::PgmError;
use crate::qvol::QvolError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Qvol { path: PathBuf, source: QvolError },
    #[error("{path}: {source}")]
    Pgm { path: PathBuf, source: PgmError },
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("region file {path}: {message}")]
    Region { path: PathBuf, message: String },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] quasi_core::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    /// 3 for numeric breakdown inside the solver, 2 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(quasi_core::Error::NonFinite { .. }) => 3,
            _ => 2,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
