use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("empty trial sequence")]
    EmptyTrials,
    #[error("budget must be positive")]
    ZeroBudget,
    #[error("repetitions must be positive")]
    ZeroRepetitions,
    #[error("non-finite objective value {0}")]
    NonFinite(f64),
    #[error("all trials in the library diverged")]
    AllDiverged,
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unknown optimizer id `{0}`")]
    UnknownOptimizer(String),
    #[error("unknown task `{0}`")]
    UnknownTask(String),
    #[error("libraries disagree: {0}")]
    Mismatch(String),
    #[error("calibration failed: {0}")]
    Calibration(String),
    #[error("trial {index} has no recorded update steps")]
    MissingUpdateSteps { index: usize },
    #[error("scores must be positive; shift minimized objectives first (got {0})")]
    NonPositiveScore(f64),
    #[error("training diverged: {0}")]
    Diverged(String),
    #[error("internal numerical error: {0}")]
    Numerical(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
