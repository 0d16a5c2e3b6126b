use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// No assignment satisfies every rate and bandwidth constraint.
    #[error("infeasible instance: {0}")]
    Infeasible(String),

    /// The LP engine gave up (iteration cap, singular basis, ...).
    #[error("solver failure: {0}")]
    SolverFailure(String),

    #[error("instance too large for exhaustive search: {0}")]
    SizeLimit(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("parse error in {path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
