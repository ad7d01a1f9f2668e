use std::io;

use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    /// The frequency density does not satisfy the evenness / unimodality
    /// hypotheses required for the transition-point formulas.
    #[error("stability hypotheses not met: {0}")]
    AssumptionsUnmet(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("malformed input at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
