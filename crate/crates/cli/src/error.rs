use std::path::Path;

use thiserror::Error;

/// Failure of a command, carrying the process exit code it maps to.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("calibration failed: {0}")]
    Calibration(String),
    #[error("grid error: {0}")]
    Grid(String),
    #[error("missing field: {0}")]
    MissingField(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Core(tunebench::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Calibration(_) => 3,
            CliError::Grid(_) => 4,
            CliError::MissingField(_) => 5,
            CliError::Parse(_) => 6,
            CliError::Io(_) | CliError::Core(_) => 1,
        }
    }

    pub fn io(path: &Path, err: impl std::fmt::Display) -> Self {
        CliError::Io(format!("{}: {err}", path.display()))
    }

    pub fn parse(path: &Path, err: impl std::fmt::Display) -> Self {
        CliError::Parse(format!("{}: {err}", path.display()))
    }
}

impl From<tunebench::Error> for CliError {
    fn from(err: tunebench::Error) -> Self {
        use tunebench::Error as E;
        match err {
            E::UnknownOptimizer(_) | E::UnknownTask(_) => CliError::Config(err.to_string()),
            E::Calibration(_) | E::AllDiverged => CliError::Calibration(err.to_string()),
            E::Mismatch(_) => CliError::Grid(err.to_string()),
            E::MissingUpdateSteps { .. } => CliError::MissingField(err.to_string()),
            other => CliError::Core(other),
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
