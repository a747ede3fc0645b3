use thiserror::Error;

use crate::cache::CacheError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("constraint violated: {0}")]
    Constraint(String),
    #[error("cache error: {0}")]
    Cache(#[from] CacheError),
    #[error("{0}")]
    Compute(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Constraint(_) => 3,
            CliError::Cache(_) => 4,
            CliError::Compute(_) | CliError::Io(_) => 1,
        }
    }

    pub fn compute(e: impl std::fmt::Display) -> Self {
        CliError::Compute(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Compute(format!("csv: {e}"))
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
