//! The doubling-sample checkers.
//!
//! Every Prob evaluation draws its samples from a stream derived from the
//! master seed and the query's cache key, and round `r`, sample `k`,
//! argument `i` use the substream `(r, k, i)` of it. Results therefore do
//! not depend on thread scheduling or on whether the verdict cache is on.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Instant;

use dashmap::DashMap;
use rayon::prelude::*;

use super::budget::{allocate_budgets, choose_delta, propagate_errors, ErrorBudget};
use super::{EngineError, Method, Outcome, SmcConfig, SmcVerdict, UndecidedReason};
use crate::logic::{
    prob_key, EvalError, Evaluator, HyperFormula, Node, NodeId, PathAssignment, ProbKey,
    VerdictProvider,
};
use crate::model::{mix_key, sample_path, substream, Dtmc};
use crate::stats::{
    approx_bayes_test, bayes_factor, bayes_test_ln, sprt_test, BernoulliCounts, TestDecision,
};

/// Why a run stopped without a verdict.
#[derive(Debug)]
enum Abort {
    Timeout,
    Error(EngineError),
}

impl From<EvalError> for Abort {
    fn from(e: EvalError) -> Self {
        Abort::Error(e.into())
    }
}

impl From<EngineError> for Abort {
    fn from(e: EngineError) -> Self {
        Abort::Error(e)
    }
}

impl From<crate::stats::StatsError> for Abort {
    fn from(e: crate::stats::StatsError) -> Self {
        Abort::Error(e.into())
    }
}

struct RunResult {
    outcome: Outcome,
    samples: u64,
    total: u64,
}

/// Reusable checker for one (model, formula, configuration). Nested
/// verdicts are cached across calls to [`Checker::check`].
pub struct Checker<'a> {
    model: &'a Dtmc,
    formula: &'a HyperFormula,
    cfg: SmcConfig,
    eval: Evaluator<'a>,
    leaf_budgets: HashMap<NodeId, ErrorBudget>,
    deltas: HashMap<NodeId, f64>,
    root_budget: ErrorBudget,
    cache: DashMap<ProbKey, bool>,
    nested_tests: AtomicU64,
    nested_samples: AtomicU64,
}

impl<'a> Checker<'a> {
    pub fn new(
        model: &'a Dtmc,
        formula: &'a HyperFormula,
        cfg: SmcConfig,
    ) -> Result<Self, EngineError> {
        cfg.validate()?;
        let closure = formula.check_closed();
        if !closure.is_ok() {
            return Err(EngineError::NotClosed(closure));
        }
        let root = formula.root();
        if cfg.method == Method::Sprt && !(formula.is_prob(root) && !formula.is_nested(root)) {
            return Err(EngineError::Unsupported(
                "the SPRT checker handles non-nested probability operators at the root only".into(),
            ));
        }

        let mut leaf_budgets = HashMap::new();
        let mut deltas = HashMap::new();
        let root_budget = if formula.is_prob(root) {
            ErrorBudget::new(cfg.alpha, cfg.beta)
        } else {
            let alloc = allocate_budgets(formula, root, cfg.alpha.min(cfg.beta));
            let b = propagate_errors(formula, root, &alloc)?;
            leaf_budgets.extend(alloc);
            b
        };
        for id in formula.node_ids() {
            let Node::Prob { region, args } = formula.node(id) else {
                continue;
            };
            if !formula.is_nested(id) {
                continue;
            }
            let target = choose_delta(region, cfg.kappa, cfg.delta_cap)?;
            let mut delta = 0.0f64;
            for a in args {
                let alloc = allocate_budgets(formula, a.body, target);
                delta = delta.max(propagate_errors(formula, a.body, &alloc)?.max_component());
                leaf_budgets.extend(alloc);
            }
            deltas.insert(id, delta);
        }

        Ok(Self {
            model,
            formula,
            eval: Evaluator::new(model, formula),
            cfg,
            leaf_budgets,
            deltas,
            root_budget,
            cache: DashMap::new(),
            nested_tests: AtomicU64::new(0),
            nested_samples: AtomicU64::new(0),
        })
    }

    pub fn config(&self) -> &SmcConfig {
        &self.cfg
    }

    /// Budget handed to the nested Prob node `id`, if it has one.
    pub fn leaf_budget(&self, id: NodeId) -> Option<ErrorBudget> {
        self.leaf_budgets.get(&id).copied()
    }

    /// δ of the approximate test at the nested Prob node `id`.
    pub fn delta(&self, id: NodeId) -> Option<f64> {
        self.deltas.get(&id).copied()
    }

    /// Decides the formula under `v`.
    pub fn check(&self, v: &PathAssignment) -> Result<SmcVerdict, EngineError> {
        let start = Instant::now();
        let deadline = self.cfg.timeout.map(|t| start + t);
        let tests_before = self.nested_tests.load(Ordering::Relaxed);
        let samples_before = self.nested_samples.load(Ordering::Relaxed);
        let root = self.formula.root();

        let run = if self.formula.is_prob(root) {
            let key = prob_key(self.formula, root, v)?;
            self.run_prob(
                root,
                v,
                self.cfg.alpha,
                self.cfg.beta,
                self.stream(&key),
                deadline,
            )
        } else {
            let provider = Nested {
                checker: self,
                deadline,
            };
            self.eval.eval(root, v, &provider).map(|b| RunResult {
                outcome: if b { Outcome::True } else { Outcome::False },
                samples: 0,
                total: 0,
            })
        };
        let run = match run {
            Ok(r) => r,
            Err(Abort::Timeout) => RunResult {
                outcome: Outcome::Undecided(UndecidedReason::Timeout),
                samples: 0,
                total: 0,
            },
            Err(Abort::Error(e)) => return Err(e),
        };
        Ok(SmcVerdict {
            outcome: run.outcome,
            samples: run.samples,
            total_samples: run.total,
            nested_tests: self.nested_tests.load(Ordering::Relaxed) - tests_before,
            nested_samples: self.nested_samples.load(Ordering::Relaxed) - samples_before,
            seconds: start.elapsed().as_secs_f64(),
            budget: self.root_budget,
            delta: self.delta(root),
        })
    }

    fn stream(&self, key: &ProbKey) -> u64 {
        let mut words = Vec::with_capacity(key.states.len() + 1);
        words.push(key.node.index() as u64);
        words.extend(key.states.iter().map(|&s| s as u64));
        mix_key(self.cfg.seed, &words)
    }

    fn nested_verdict(
        &self,
        node: NodeId,
        v: &PathAssignment,
        deadline: Option<Instant>,
    ) -> Result<bool, Abort> {
        let key = prob_key(self.formula, node, v)?;
        if self.cfg.use_cache {
            if let Some(hit) = self.cache.get(&key) {
                return Ok(*hit);
            }
        }
        let budget = self
            .leaf_budget(node)
            .ok_or(EngineError::MissingBudget(node))?;
        let r = self.run_prob(
            node,
            v,
            budget.type1,
            budget.type2,
            self.stream(&key),
            deadline,
        )?;
        self.nested_tests.fetch_add(1, Ordering::Relaxed);
        self.nested_samples.fetch_add(r.total, Ordering::Relaxed);
        // Undecided nested tests count as "not satisfied".
        let value = r.outcome == Outcome::True;
        if self.cfg.use_cache {
            return Ok(*self.cache.entry(key).or_insert(value));
        }
        Ok(value)
    }

    fn run_prob(
        &self,
        node: NodeId,
        v: &PathAssignment,
        alpha: f64,
        beta: f64,
        stream: u64,
        deadline: Option<Instant>,
    ) -> Result<RunResult, Abort> {
        let Node::Prob { region, args } = self.formula.node(node) else {
            return Err(
                EngineError::Unsupported(format!("{node} is not a probability operator")).into(),
            );
        };
        for a in args {
            for &var in &a.vars {
                if v.state(var, 0).is_none() {
                    return Err(EvalError::Unmapped(self.formula.var_name(var).to_string()).into());
                }
            }
        }
        let delta = self.delta(node);
        let provider = Nested {
            checker: self,
            deadline,
        };
        let dim = args.len();
        let mut n = 1u64;
        let mut total = 0u64;
        let mut last = 0u64;
        for round in 0u64.. {
            if deadline.is_some_and(|d| Instant::now() >= d) {
                return Err(Abort::Timeout);
            }
            if total.saturating_add(n) > self.cfg.max_samples {
                return Ok(RunResult {
                    outcome: Outcome::Undecided(UndecidedReason::SampleCap),
                    samples: last,
                    total,
                });
            }
            total += n;
            last = n;
            let successes = (0..n)
                .into_par_iter()
                .map(|k| self.sample_joint(node, v, round, k, stream, &provider))
                .try_reduce(
                    || vec![0u64; dim],
                    |mut acc, x| {
                        acc.iter_mut().zip(x).for_each(|(a, b)| *a += b);
                        Ok(acc)
                    },
                )?;
            let counts = BernoulliCounts::new(successes, n)?;
            let decision = match (self.cfg.method, delta) {
                (Method::Sprt, _) => sprt_test(&counts, region, self.cfg.sprt_eps, alpha, beta)?,
                (Method::Bayes, Some(delta)) => {
                    approx_bayes_test(&self.cfg.prior, &counts, region, delta, alpha, beta)?
                        .decision
                }
                (Method::Bayes, None) => {
                    let b = bayes_factor(&self.cfg.prior, &counts, region)?;
                    bayes_test_ln(b.ln, alpha, beta)
                }
            };
            let outcome = match decision {
                TestDecision::AcceptH0 => Outcome::True,
                TestDecision::RejectH0 => Outcome::False,
                TestDecision::Indifferent => Outcome::Undecided(UndecidedReason::Indifference),
                TestDecision::Continue => {
                    n = n.saturating_mul(2);
                    continue;
                }
            };
            return Ok(RunResult {
                outcome,
                samples: n,
                total,
            });
        }
        unreachable!("the round counter is unbounded")
    }

    /// One joint sample: success indicator per Pr argument.
    fn sample_joint(
        &self,
        node: NodeId,
        v: &PathAssignment,
        round: u64,
        k: u64,
        stream: u64,
        provider: &Nested<'_, 'a>,
    ) -> Result<Vec<u64>, Abort> {
        let Node::Prob { args, .. } = self.formula.node(node) else {
            unreachable!("checked by run_prob")
        };
        let mut out = Vec::with_capacity(args.len());
        for (i, a) in args.iter().enumerate() {
            let mut rng = substream(stream, &[round, k, i as u64]);
            let mut w = v.clone();
            for &var in &a.vars {
                let start = v.state(var, 0).expect("checked by run_prob");
                let len = self.formula.reach(a.body, var).unwrap_or(0) as usize;
                w.bind(var, &sample_path(self.model, start, len, &mut rng));
            }
            out.push(u64::from(self.eval.eval(a.body, &w, provider)?));
        }
        Ok(out)
    }
}

struct Nested<'c, 'a> {
    checker: &'c Checker<'a>,
    deadline: Option<Instant>,
}

impl VerdictProvider for Nested<'_, '_> {
    type Error = Abort;

    fn verdict(&self, node: NodeId, v: &PathAssignment) -> Result<bool, Abort> {
        self.checker.nested_verdict(node, v, self.deadline)
    }
}

fn require_flat_root(formula: &HyperFormula, what: &str) -> Result<(), EngineError> {
    let root = formula.root();
    if !formula.is_prob(root) || formula.is_nested(root) {
        return Err(EngineError::Unsupported(format!(
            "{what} needs a non-nested probability operator at the root"
        )));
    }
    Ok(())
}

/// Bayes' test with doubling sample sizes on a non-nested Prob formula.
pub fn base_bayes(
    model: &Dtmc,
    formula: &HyperFormula,
    v: &PathAssignment,
    cfg: &SmcConfig,
) -> Result<SmcVerdict, EngineError> {
    require_flat_root(formula, "base_bayes")?;
    let cfg = SmcConfig {
        method: Method::Bayes,
        ..cfg.clone()
    };
    Checker::new(model, formula, cfg)?.check(v)
}

/// Recursive Bayesian checker for arbitrary (possibly nested) formulae.
pub fn bayes_smc(
    model: &Dtmc,
    formula: &HyperFormula,
    v: &PathAssignment,
    cfg: &SmcConfig,
) -> Result<SmcVerdict, EngineError> {
    let cfg = SmcConfig {
        method: Method::Bayes,
        ..cfg.clone()
    };
    Checker::new(model, formula, cfg)?.check(v)
}

/// SPRT baseline with the same sampling loop as [`base_bayes`].
pub fn sprt_smc(
    model: &Dtmc,
    formula: &HyperFormula,
    v: &PathAssignment,
    cfg: &SmcConfig,
) -> Result<SmcVerdict, EngineError> {
    require_flat_root(formula, "sprt_smc")?;
    let cfg = SmcConfig {
        method: Method::Sprt,
        ..cfg.clone()
    };
    Checker::new(model, formula, cfg)?.check(v)
}
