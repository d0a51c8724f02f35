use std::fmt;

use fdrsafe::{Error, Stage};

/// Exit 2 for bad input or configuration, 3 when the pipeline fails.
#[derive(Debug)]
pub enum CliError {
    Input(String),
    Pipeline { stage: Stage, message: String },
}

impl CliError {
    pub fn input(msg: impl Into<String>) -> Self {
        CliError::Input(msg.into())
    }

    pub fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Pipeline { .. } => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(msg) => write!(f, "{msg}"),
            CliError::Pipeline { stage, message } => write!(f, "pipeline error (stage: {stage}): {message}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Input(m) | Error::Config(m) => CliError::Input(m),
            Error::Pipeline { stage, message } => CliError::Pipeline { stage, message },
            Error::GeneratorFit(message) => CliError::Pipeline {
                stage: Stage::Generator,
                message,
            },
            Error::Fit(fit) => CliError::Pipeline {
                stage: Stage::ObservedFit,
                message: fit.to_string(),
            },
            other @ Error::UndefinedVariance(_) => CliError::Pipeline {
                stage: Stage::Scoring,
                message: other.to_string(),
            },
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn io_context(path: &std::path::Path, e: std::io::Error) -> CliError {
    CliError::input(format!("{}: {e}", path.display()))
}
