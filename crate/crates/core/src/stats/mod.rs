//! Hypothesis tests over vectors of Bernoulli parameters.

mod bayes;
mod beta;
mod region;
mod sprt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bayes::{
    approx_bayes_test, bayes_factor, bayes_test, bayes_test_ln, posterior_mass, prior_mass,
    prior_ratios, ApproxOutcome, BayesFactor, BernoulliCounts,
};
pub use beta::{ln_beta, ln_gamma, reg_inc_beta, BetaPrior};
pub use region::{BoxRegion, Interval};
pub use sprt::{face_llr, sprt_test};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("invalid Beta prior ({a}, {b}); both shapes must be positive")]
    InvalidPrior { a: f64, b: f64 },
    #[error("invalid interval [{lo}, {hi}]")]
    InvalidInterval { lo: f64, hi: f64 },
    #[error("a region needs at least one interval")]
    EmptyRegion,
    #[error("{successes} successes out of {trials} trials")]
    InvalidCounts { successes: u64, trials: u64 },
    #[error("counts have dimension {counts} but the region has {region}")]
    DimensionMismatch { counts: usize, region: usize },
    #[error("prior mass of the region is {0}; the Bayes factor needs it strictly inside (0, 1)")]
    DegeneratePriorMass(f64),
    #[error("region reduced by {delta} is empty")]
    EmptyReducedRegion { delta: f64 },
    #[error("SPRT face {face} with indifference {eps} leaves (0, 1)")]
    FaceOutOfRange { face: f64, eps: f64 },
    #[error("SPRT indifference {0} must lie in (0, 0.5)")]
    InvalidIndifference(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TestDecision {
    AcceptH0,
    RejectH0,
    Continue,
    Indifferent,
}
