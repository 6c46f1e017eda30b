use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// The configuration violates a constraint.
    #[error("configuration error: {0}")]
    Config(String),
    /// Inputs to `compare` are inconsistent or incomplete.
    #[error("input error: {0}")]
    Input(String),
    #[error("I/O error at {}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] ctcpp::Error),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn io(path: impl AsRef<Path>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.as_ref().to_path_buf(),
            source,
        }
    }

    /// Process exit status: 2 for bad configuration or input, 3 for I/O failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) | Self::Input(_) => 2,
            Self::Io { .. } => 3,
            Self::Core(ctcpp::Error::Config(_) | ctcpp::Error::Parse(_)) => 2,
            Self::Core(ctcpp::Error::Io(_)) => 3,
            Self::Core(_) => 1,
        }
    }
}
