use std::path::Path;

use sparse_ising::IsingError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),

    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },

    #[error("did not converge: {0}")]
    NonConvergence(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.display().to_string(), source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } => 1,
            CliError::Validation(_) => 2,
            CliError::NonConvergence(_) => 3,
        }
    }
}

impl From<IsingError> for CliError {
    fn from(e: IsingError) -> Self {
        CliError::Validation(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
