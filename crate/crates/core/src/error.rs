use thiserror::Error;

/// Errors raised by the inference engine, predictors, oracles and harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A caller broke an operation's precondition.
    #[error("contract violation: {0}")]
    Contract(String),
    /// An experiment or session configuration was rejected.
    #[error("invalid configuration: {0}")]
    Config(String),
    /// Predictor training produced a non-finite loss or gradient.
    #[error("training failure: {0}")]
    Training(String),
    /// The posterior filter lost all of its mass.
    #[error("degenerate posterior: all candidate weights are zero")]
    DegeneratePosterior,
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
