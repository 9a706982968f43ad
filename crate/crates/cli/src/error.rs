use std::fmt::Display;

use thiserror::Error;

/// Command failure, split by the exit code it maps to.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad arguments, unreadable or malformed inputs. Exit code 2.
    #[error("{0}")]
    Input(String),
    /// The command ran but a check or the computation failed. Exit code 1.
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn input(msg: impl Display) -> Self {
        CliError::Input(msg.to_string())
    }

    pub fn failed(msg: impl Display) -> Self {
        CliError::Failed(msg.to_string())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Failed(_) => 1,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
