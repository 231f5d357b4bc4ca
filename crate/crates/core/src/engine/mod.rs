//! Statistical model checking: error budgets, the Bayesian checkers for flat
//! and nested formulae, and the SPRT baseline.

mod budget;
mod smc;

use std::fmt;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::logic::{ClosureReport, EvalError, HyperFormula, NodeId, PathAssignment, VarId};
use crate::model::{sample_path, substream, Dtmc};
use crate::stats::{BetaPrior, StatsError};

pub use budget::{allocate_budgets, choose_delta, propagate_errors, ErrorBudget, DEGENERATE_WIDTH};
pub use smc::{base_bayes, bayes_smc, sprt_smc, Checker};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("formula is not closed: {}", describe_closure(.0))]
    NotClosed(ClosureReport),
    #[error("no error budget for probabilistic subformula {0}")]
    MissingBudget(NodeId),
    #[error("region {0} is too thin for the approximate test")]
    DegenerateRegion(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

fn describe_closure(r: &ClosureReport) -> String {
    r.violations
        .iter()
        .map(|v| format!("'{}' under {}", v.var, v.prob))
        .collect::<Vec<_>>()
        .join(", ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Bayes,
    Sprt,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Bayes => "bayes",
            Method::Sprt => "sprt",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SmcConfig {
    pub prior: BetaPrior,
    pub alpha: f64,
    pub beta: f64,
    /// Fraction of the region slack used as δ for nested tests.
    pub kappa: f64,
    pub delta_cap: f64,
    /// Cap on cumulative joint samples of one test.
    pub max_samples: u64,
    pub timeout: Option<Duration>,
    pub seed: u64,
    pub method: Method,
    pub sprt_eps: f64,
    pub use_cache: bool,
}

impl Default for SmcConfig {
    fn default() -> Self {
        Self {
            prior: BetaPrior::uniform(),
            alpha: 0.01,
            beta: 0.01,
            kappa: 0.25,
            delta_cap: 0.02,
            max_samples: 1_000_000,
            timeout: Some(Duration::from_secs(1800)),
            seed: 0,
            method: Method::Bayes,
            sprt_eps: 0.01,
            use_cache: true,
        }
    }
}

impl SmcConfig {
    pub fn validate(&self) -> Result<(), EngineError> {
        let unit = |x: f64| x > 0.0 && x < 1.0;
        if !unit(self.alpha) {
            return Err(EngineError::Config(format!(
                "alpha {} not in (0,1)",
                self.alpha
            )));
        }
        if !unit(self.beta) {
            return Err(EngineError::Config(format!(
                "beta {} not in (0,1)",
                self.beta
            )));
        }
        if !unit(self.kappa) {
            return Err(EngineError::Config(format!(
                "kappa {} not in (0,1)",
                self.kappa
            )));
        }
        if !unit(self.delta_cap) {
            return Err(EngineError::Config(format!(
                "delta cap {} not in (0,1)",
                self.delta_cap
            )));
        }
        if self.max_samples == 0 {
            return Err(EngineError::Config("max samples must be at least 1".into()));
        }
        if self.method == Method::Sprt && !(self.sprt_eps > 0.0 && self.sprt_eps < 0.5) {
            return Err(EngineError::Config(format!(
                "sprt eps {} not in (0,0.5)",
                self.sprt_eps
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UndecidedReason {
    Indifference,
    SampleCap,
    Timeout,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    True,
    False,
    Undecided(UndecidedReason),
}

impl Outcome {
    pub fn is_decided(self) -> bool {
        !matches!(self, Outcome::Undecided(_))
    }

    pub fn as_bool(self) -> Option<bool> {
        match self {
            Outcome::True => Some(true),
            Outcome::False => Some(false),
            Outcome::Undecided(_) => None,
        }
    }

    /// `true`, `false` or `undecided`.
    pub fn label(self) -> &'static str {
        match self {
            Outcome::True => "true",
            Outcome::False => "false",
            Outcome::Undecided(_) => "undecided",
        }
    }

    /// Reason string for undecided outcomes, empty otherwise.
    pub fn reason(self) -> &'static str {
        match self {
            Outcome::Undecided(UndecidedReason::Indifference) => "indifference",
            Outcome::Undecided(UndecidedReason::SampleCap) => "sample-cap",
            Outcome::Undecided(UndecidedReason::Timeout) => "timeout",
            _ => "",
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Undecided(_) => write!(f, "undecided ({})", self.reason()),
            _ => f.write_str(self.label()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmcVerdict {
    pub outcome: Outcome,
    /// Joint sample size of the final round.
    pub samples: u64,
    /// Joint samples summed over all rounds of the top-level test.
    pub total_samples: u64,
    /// Nested tests actually run (cache misses).
    pub nested_tests: u64,
    /// Joint samples summed over all nested tests.
    pub nested_samples: u64,
    pub seconds: f64,
    /// Error bounds the verdict is certified for.
    pub budget: ErrorBudget,
    /// δ of the approximate test, for nested roots.
    pub delta: Option<f64>,
}

/// Stream tag separating assignment paths from checker samples.
const ASSIGN_STREAM: u64 = 0x6173_7369_676e;

/// Builds a path assignment by sampling, for each `(variable, start)`, one
/// path from `start` as long as the formula reads that variable. Paths are
/// drawn from substreams of `seed` keyed by the variable index.
pub fn seeded_assignment(
    model: &Dtmc,
    formula: &HyperFormula,
    starts: &[(VarId, usize)],
    seed: u64,
) -> PathAssignment {
    let mut v = PathAssignment::new(formula);
    for &(var, start) in starts {
        let len = formula.reach(formula.root(), var).unwrap_or(0) as usize;
        let mut rng = substream(seed, &[ASSIGN_STREAM, var.index() as u64]);
        v.bind(var, &sample_path(model, start, len, &mut rng));
    }
    v
}
