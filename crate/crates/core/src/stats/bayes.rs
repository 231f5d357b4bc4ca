//! Bayes factors for box hypotheses over independent Bernoulli parameters,
//! the Bayes' test and its approximate variant for noisy samples.

use serde::{Deserialize, Serialize};

use super::{BetaPrior, BoxRegion, StatsError, TestDecision};

/// Sufficient statistics of N joint Bernoulli samples.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BernoulliCounts {
    successes: Vec<u64>,
    trials: u64,
}

impl BernoulliCounts {
    pub fn new(successes: Vec<u64>, trials: u64) -> Result<Self, StatsError> {
        if let Some(&m) = successes.iter().find(|&&m| m > trials) {
            return Err(StatsError::InvalidCounts {
                successes: m,
                trials,
            });
        }
        Ok(Self { successes, trials })
    }

    pub fn empty(dimension: usize) -> Self {
        Self {
            successes: vec![0; dimension],
            trials: 0,
        }
    }

    pub fn successes(&self) -> &[u64] {
        &self.successes
    }

    pub fn trials(&self) -> u64 {
        self.trials
    }

    pub fn dimension(&self) -> usize {
        self.successes.len()
    }
}

/// Natural log of a box's mass and of its complement's mass under the
/// product of identical Beta marginals `params[i]`.
struct LogMass {
    ln_mass: f64,
    ln_complement: f64,
}

fn log_box_mass(params: impl Iterator<Item = BetaPrior>, d: &BoxRegion) -> LogMass {
    let mut ln_mass = 0.0;
    for (p, iv) in params.zip(d.intervals()) {
        let (m, c) = p.interval_mass(iv.lo, iv.hi);
        ln_mass += if m > 0.5 { (-c).ln_1p() } else { m.ln() };
    }
    let ln_complement = if ln_mass < -std::f64::consts::LN_2 {
        (-ln_mass.exp()).ln_1p()
    } else {
        (-ln_mass.exp_m1()).ln()
    };
    LogMass {
        ln_mass,
        ln_complement,
    }
}

/// P_D: prior probability that Θ̄ ∈ D with i.i.d. `prior` marginals.
pub fn prior_mass(prior: &BetaPrior, d: &BoxRegion) -> f64 {
    log_box_mass(std::iter::repeat(*prior), d).ln_mass.exp()
}

/// Q_D: posterior probability of D after observing `counts`.
pub fn posterior_mass(prior: &BetaPrior, counts: &BernoulliCounts, d: &BoxRegion) -> f64 {
    debug_assert_eq!(counts.dimension(), d.dimension());
    let n = counts.trials();
    let params = counts.successes().iter().map(|&m| prior.posterior(m, n));
    log_box_mass(params, d).ln_mass.exp()
}

/// A Bayes factor held in log space. `saturated` marks the ±∞ sentinel used
/// when the posterior mass of D or of its complement underflows to zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BayesFactor {
    pub ln: f64,
    pub saturated: bool,
}

impl BayesFactor {
    pub fn value(&self) -> f64 {
        self.ln.exp()
    }
}

/// B = [Q_D / (1 − Q_D)] · [(1 − P_D) / P_D]; the posterior-odds over
/// prior-odds form of the likelihood ratio.
pub fn bayes_factor(
    prior: &BetaPrior,
    counts: &BernoulliCounts,
    d: &BoxRegion,
) -> Result<BayesFactor, StatsError> {
    if counts.dimension() != d.dimension() {
        return Err(StatsError::DimensionMismatch {
            counts: counts.dimension(),
            region: d.dimension(),
        });
    }
    let p = log_box_mass(std::iter::repeat(*prior), d);
    if !(p.ln_mass.is_finite() && p.ln_complement.is_finite()) {
        return Err(StatsError::DegeneratePriorMass(p.ln_mass.exp()));
    }
    let n = counts.trials();
    let q = log_box_mass(counts.successes().iter().map(|&m| prior.posterior(m, n)), d);
    let prior_log_odds = p.ln_complement - p.ln_mass;
    if q.ln_complement == f64::NEG_INFINITY {
        return Ok(BayesFactor {
            ln: f64::INFINITY,
            saturated: true,
        });
    }
    if q.ln_mass == f64::NEG_INFINITY {
        return Ok(BayesFactor {
            ln: f64::NEG_INFINITY,
            saturated: true,
        });
    }
    Ok(BayesFactor {
        ln: q.ln_mass - q.ln_complement + prior_log_odds,
        saturated: false,
    })
}

/// Accept H0 iff b ≥ 1/β, reject iff b ≤ α, otherwise keep sampling.
pub fn bayes_test(b: f64, alpha: f64, beta: f64) -> TestDecision {
    if b >= 1.0 / beta {
        TestDecision::AcceptH0
    } else if b <= alpha {
        TestDecision::RejectH0
    } else {
        TestDecision::Continue
    }
}

/// [`bayes_test`] on a log-space factor.
pub fn bayes_test_ln(ln_b: f64, alpha: f64, beta: f64) -> TestDecision {
    if ln_b >= -beta.ln() {
        TestDecision::AcceptH0
    } else if ln_b <= alpha.ln() {
        TestDecision::RejectH0
    } else {
        TestDecision::Continue
    }
}

/// Prior-mass correction constants of the approximate test:
/// r1 = P(D) / P(D⁺_{2δ}) and r2 = P(Dᶜ) / P((Dᶜ)⁺_{2δ}).
pub fn prior_ratios(prior: &BetaPrior, d: &BoxRegion, delta: f64) -> (f64, f64) {
    let p_d = prior_mass(prior, d);
    let r1 = p_d / prior_mass(prior, &d.expand(2.0 * delta));
    let p_reduced = d.reduce(2.0 * delta).map_or(0.0, |r| prior_mass(prior, &r));
    let r2 = (1.0 - p_d) / (1.0 - p_reduced);
    (r1, r2)
}

/// Everything the approximate test computed, for diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApproxOutcome {
    pub decision: TestDecision,
    pub r1: f64,
    pub r2: f64,
    pub ln_b_reduced: f64,
    pub ln_b_expanded: f64,
}

/// Bayes factor of a derived region, mapping the cases the plain factor
/// rejects onto the sentinel that disables the corresponding verdict.
fn derived_factor(
    prior: &BetaPrior,
    counts: &BernoulliCounts,
    d: &BoxRegion,
) -> Result<f64, StatsError> {
    match bayes_factor(prior, counts, d) {
        Ok(b) => Ok(b.ln),
        Err(StatsError::DegeneratePriorMass(m)) if m >= 1.0 || d.is_full() => Ok(f64::INFINITY),
        Err(StatsError::DegeneratePriorMass(_)) => Ok(f64::NEG_INFINITY),
        Err(e) => Err(e),
    }
}

/// Approximate Bayes' test for samples drawn from a proxy whose parameter
/// lies within `delta` (L∞) of the true one.
pub fn approx_bayes_test(
    prior: &BetaPrior,
    counts: &BernoulliCounts,
    d: &BoxRegion,
    delta: f64,
    alpha: f64,
    beta: f64,
) -> Result<ApproxOutcome, StatsError> {
    let p_d = prior_mass(prior, d);
    if !(p_d > 0.0 && p_d < 1.0) {
        return Err(StatsError::DegeneratePriorMass(p_d));
    }
    let reduced = d
        .reduce(delta)
        .ok_or(StatsError::EmptyReducedRegion { delta })?;
    let expanded = d.expand(delta);
    let (r1, r2) = prior_ratios(prior, d, delta);
    let ln_b_reduced = derived_factor(prior, counts, &reduced)?;
    let ln_b_expanded = derived_factor(prior, counts, &expanded)?;

    let accept_at = -(beta * r2).ln();
    let reject_at = (alpha * r1).ln();
    let decision = if ln_b_reduced >= accept_at {
        TestDecision::AcceptH0
    } else if ln_b_expanded <= reject_at {
        TestDecision::RejectH0
    } else if ln_b_expanded >= accept_at && ln_b_reduced <= reject_at {
        TestDecision::Indifferent
    } else {
        TestDecision::Continue
    };
    Ok(ApproxOutcome {
        decision,
        r1,
        r2,
        ln_b_reduced,
        ln_b_expanded,
    })
}
