use thiserror::Error;

/// Failure of a single candidate model. Never fatal to a grid run: the caller
/// excludes the model and records the reason.
#[derive(Debug, Clone, PartialEq, Error, serde::Serialize, serde::Deserialize)]
#[error("model {model_id} failed: {reason}")]
pub struct FitError {
    pub model_id: String,
    pub reason: String,
}

impl FitError {
    pub fn new(model_id: impl Into<String>, reason: impl Into<String>) -> Self {
        Self {
            model_id: model_id.into(),
            reason: reason.into(),
        }
    }
}

/// Pipeline stage reported with a [`Error::Pipeline`] failure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Generator,
    Synthesis,
    Scoring,
    Selection,
    ObservedFit,
    Ensemble,
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Stage::Generator => "generator",
            Stage::Synthesis => "synthesis",
            Stage::Scoring => "scoring",
            Stage::Selection => "selection",
            Stage::ObservedFit => "observed-fit",
            Stage::Ensemble => "ensemble",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error("generator fit failed: {0}")]
    GeneratorFit(String),
    #[error("pipeline failed at {stage}: {message}")]
    Pipeline { stage: Stage, message: String },
    #[error("variance undefined with fewer than two synthetic datasets (got {0})")]
    UndefinedVariance(usize),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn pipeline(stage: Stage, msg: impl Into<String>) -> Self {
        Error::Pipeline {
            stage,
            message: msg.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
