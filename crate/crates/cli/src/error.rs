use std::io;

use thiserror::Error;

/// Failures of an experiment run, grouped by the exit code they map to.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    /// Prefix the message with where the failure happened.
    pub fn context(self, what: impl std::fmt::Display) -> Self {
        match self {
            CliError::Config(m) => CliError::Config(format!("{what}: {m}")),
            CliError::Numerical(m) => CliError::Numerical(format!("{what}: {m}")),
            CliError::Io(e) => CliError::Io(io::Error::new(e.kind(), format!("{what}: {e}"))),
        }
    }
}

impl From<kgraph::Error> for CliError {
    fn from(e: kgraph::Error) -> Self {
        match e {
            kgraph::Error::Numerical(m) => CliError::Numerical(m),
            kgraph::Error::Io(e) => CliError::Io(e),
            other => CliError::Config(other.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
