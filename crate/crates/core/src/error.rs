use alloc::string::String;

use crate::trends::Direction;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("no eligible (asset, start) pair for segments of length {length}")]
    EmptyDomain { length: usize },

    #[error("partition leaves an empty side")]
    DegenerateSplit,

    #[error("duplicate values remain after {retries} resampling rounds")]
    DuplicateUnresolvable { retries: usize },

    #[error("model has no {missing} trend, cannot alternate directions")]
    AlternationImpossible { missing: Direction },

    #[error("empty model: {0}")]
    EmptyModel(String),

    #[error("series has zero variance")]
    ZeroVariance,

    #[error("row {row} has zero norm")]
    ZeroNormRow { row: usize },

    #[error("labels contain a single class")]
    SingleClass,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("fit failed after {iterations} iterations (best log-likelihood {best_loglik})")]
    FitFailure { iterations: usize, best_loglik: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn input(reason: impl Into<String>) -> Self {
        Error::InvalidInput(reason.into())
    }

    /// True for failures of an otherwise valid computation (optimizer
    /// non-convergence, singular matrices) as opposed to rejected input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::FitFailure { .. } | Error::Numerical(_))
    }
}
