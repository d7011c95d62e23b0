//! Command implementations behind the `mbnfc` binary.

pub mod app;
pub mod commands;
pub mod config_file;
pub mod report;
pub mod sample_file;

use std::path::PathBuf;

/// Failure of a command, carrying its process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Input(String),
    #[error("demodulation failed: {0}")]
    Demod(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io { .. } | CliError::Input(_) => 3,
            CliError::Demod(_) => 4,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }
}

impl From<mbnfc::ConfigError> for CliError {
    fn from(e: mbnfc::ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<mbnfc::Error> for CliError {
    fn from(e: mbnfc::Error) -> Self {
        match e {
            mbnfc::Error::Config(c) => CliError::Config(c.to_string()),
            mbnfc::Error::SyncNotFound { .. } | mbnfc::Error::Frame(_) => {
                CliError::Demod(e.to_string())
            }
            other => CliError::Input(other.to_string()),
        }
    }
}
