use std::path::Path;
use std::process::ExitCode;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("{0} of the requested cells did not complete")]
    Incomplete(usize),

    #[error("I/O error: {0}")]
    Io(String),
}

impl CliError {
    pub fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Config(_) => 1,
            CliError::Infeasible(_) | CliError::Incomplete(_) => 2,
            CliError::Io(_) => 3,
        })
    }
}

impl From<quantid::Error> for CliError {
    fn from(e: quantid::Error) -> Self {
        match e {
            quantid::Error::Infeasible { .. } => CliError::Infeasible(e.to_string()),
            quantid::Error::Io(io) => CliError::Io(io.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}
