use thiserror::Error;

use crate::contamination::AdversaryModel;

/// Errors raised by the estimation, contamination and bandit routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("probability {0} is outside the open interval (0, 1)")]
    ProbabilityOutOfRange(f64),

    #[error("median is not unique (left median {left}, right median {right})")]
    NonUniqueMedian { left: f64, right: f64 },

    #[error("median absolute deviation or its second-order analogue is not unique")]
    NonUniqueMad,

    #[error("median absolute deviation is zero")]
    ZeroMad,

    #[error("strategy `{strategy}` is not allowed against a {model} adversary")]
    IncompatibleStrategy {
        strategy: &'static str,
        model: AdversaryModel,
    },

    #[error("empty input")]
    EmptyInput,

    #[error("infeasible regime: {0}")]
    InfeasibleRegime(String),

    #[error("too few samples: got {got}, need at least {required}")]
    TooFewSamples { got: usize, required: usize },

    #[error("parameter out of range: {0}")]
    ParameterOutOfRange(String),

    #[error("construction check failed: {0}")]
    ConstructionCheck(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_probability(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::ProbabilityOutOfRange(p))
    }
}
