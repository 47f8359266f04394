use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Unreadable or malformed input, bad options or configuration; exit code 2.
    #[error("{0}")]
    Input(String),
    /// The data could not be analysed; exit code 1.
    #[error("{0}")]
    Analysis(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Analysis(_) => 1,
        }
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        CliError::Input(format!("{}: {err}", path.display()))
    }
}

impl From<jodscale::Error> for CliError {
    fn from(err: jodscale::Error) -> Self {
        if err.is_input_error() {
            CliError::Input(err.to_string())
        } else {
            CliError::Analysis(err.to_string())
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
