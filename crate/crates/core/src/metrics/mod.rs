//! Inconsistency rates, bootstrap densities, overlap curves and noise
//! sensitivity.

mod bootstrap;
mod noise;
mod overlap;
mod rates;

use thiserror::Error;

pub use bootstrap::{bootstrap, quantile, BootstrapDensity, BootstrapScheme, DEFAULT_BOOTSTRAP};
pub use noise::{corrupt_counterfactuals, noise_sensitivity, NoiseLevel, DEFAULT_FLIP_PROBS};
pub use overlap::{overlap, GammaGrid, OverlapCurve, OVERLAP_EPSILON};
pub use rates::{cir, cir_pooled, element_error_matrix, fir, ErrorMatrix, RateReport};

use crate::causation::CausationError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("agent and truth datasets cover different instances")]
    Misaligned,
    #[error("agent and truth datasets use different interventions")]
    InterventionMismatch,
    #[error("truth dataset has no value for instance {0}")]
    MissingTruth(u64),
    #[error("no answer could be parsed")]
    NoParsedAnswers,
    #[error("bootstrap needs at least one iteration")]
    EmptyBootstrap,
    #[error("PN and PS are undefined in every bootstrap sample")]
    AllUndefined,
    #[error("invalid gamma value {0}")]
    InvalidGamma(f64),
    #[error("flip probability {0} is outside [0, 1]")]
    InvalidProbability(f64),
    #[error(transparent)]
    Causation(#[from] CausationError),
}
