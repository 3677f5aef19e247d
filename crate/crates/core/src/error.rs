use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("no unique optimal arm: arms {0} and {1} share the largest mean")]
    UniqueOptimalArmViolation(usize, usize),

    #[error("information weights are required in the linear-rate regime")]
    MissingInfoWeights,

    #[error("exact action probabilities are unavailable for {0}")]
    ProbabilitiesUnavailable(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("no usable samples: all {0} values are missing")]
    AllMissing(usize),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
