//! Exact probabilities and verdicts for small instances.
//!
//! `Pr[π̄](φ)` is computed by a forward sweep over the joint states of the
//! tuple variables. Each entry carries the obligation φ still owes from the
//! current step on (formula progression); entries whose obligation is
//! decided leave the sweep, so the result is exact. Nested probability
//! operators are resolved by recursive exact verdicts, memoized per query.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex};

use thiserror::Error;

use crate::logic::{
    prob_key, EvalError, Evaluator, HyperFormula, Node, NodeId, PathAssignment, ProbKey, VarId,
    VerdictProvider,
};
use crate::model::Dtmc;

/// Default cap on sweep entries processed by one oracle.
pub const DEFAULT_BUDGET: usize = 50_000_000;

/// Probabilities closer than this to a face of the region count as on it.
pub const BOUNDARY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("exact computation exceeded its budget of {0} entries")]
    Budget(usize),
    #[error("node {0} is not a probability operator")]
    NotProb(NodeId),
    #[error("nested operator {node} reads tuple variable '{var}' beyond its current state")]
    NestedLookahead { node: NodeId, var: String },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactResult {
    /// One probability per Pr argument.
    pub probabilities: Vec<f64>,
    /// Region membership of `probabilities`.
    pub verdict: bool,
    /// L∞ distance of `probabilities` to the region boundary inside the unit
    /// cube (infinite when the region has no interior faces).
    pub boundary_distance: f64,
    /// Whether the vector lies on the boundary up to [`BOUNDARY_TOLERANCE`].
    pub on_boundary: bool,
}

/// Pending obligation at the start of the next step.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Obl {
    Const(bool),
    /// Node to evaluate; for until nodes, the remaining bound.
    At(NodeId, u32),
    Not(Box<Obl>),
    And(Box<Obl>, Box<Obl>),
    Or(Box<Obl>, Box<Obl>),
}

fn not(a: Obl) -> Obl {
    match a {
        Obl::Const(b) => Obl::Const(!b),
        Obl::Not(inner) => *inner,
        other => Obl::Not(Box::new(other)),
    }
}

fn and(a: Obl, b: Obl) -> Obl {
    match (a, b) {
        (Obl::Const(false), _) | (_, Obl::Const(false)) => Obl::Const(false),
        (Obl::Const(true), x) | (x, Obl::Const(true)) => x,
        (x, y) if x == y => x,
        (x, y) => Obl::And(Box::new(x), Box::new(y)),
    }
}

fn or(a: Obl, b: Obl) -> Obl {
    match (a, b) {
        (Obl::Const(true), _) | (_, Obl::Const(true)) => Obl::Const(true),
        (Obl::Const(false), x) | (x, Obl::Const(false)) => x,
        (x, y) if x == y => x,
        (x, y) => Obl::Or(Box::new(x), Box::new(y)),
    }
}

/// Exact evaluator for one (model, formula) pair. Nested verdicts are
/// memoized across calls.
pub struct Oracle<'a> {
    model: &'a Dtmc,
    formula: &'a HyperFormula,
    atoms: Vec<Option<usize>>,
    budget: usize,
    memo: Mutex<HashMap<ProbKey, ExactResult>>,
}

struct Frame<'v> {
    tuple: &'v [VarId],
    v: &'v PathAssignment,
    t: usize,
}

impl<'a> Oracle<'a> {
    pub fn new(model: &'a Dtmc, formula: &'a HyperFormula) -> Self {
        let atoms = formula
            .node_ids()
            .map(|id| match formula.node(id) {
                Node::Atom { atom, .. } => model.proposition_index(atom),
                _ => None,
            })
            .collect();
        Self {
            model,
            formula,
            atoms,
            budget: DEFAULT_BUDGET,
            memo: Mutex::new(HashMap::new()),
        }
    }

    pub fn with_budget(mut self, budget: usize) -> Self {
        self.budget = budget;
        self
    }

    /// Exact verdict of the Prob node `node` under `v`.
    pub fn verdict(&self, node: NodeId, v: &PathAssignment) -> Result<ExactResult, OracleError> {
        let Node::Prob { region, args } = self.formula.node(node) else {
            return Err(OracleError::NotProb(node));
        };
        let key = prob_key(self.formula, node, v)?;
        if let Some(hit) = self.memo.lock().expect("memo lock").get(&key) {
            return Ok(hit.clone());
        }
        let probabilities = args
            .iter()
            .map(|a| self.prob(a.body, &a.vars, v))
            .collect::<Result<Vec<_>, _>>()?;
        let boundary_distance = region.boundary_distance(&probabilities);
        let result = ExactResult {
            verdict: region.contains(&probabilities),
            on_boundary: boundary_distance <= BOUNDARY_TOLERANCE,
            boundary_distance,
            probabilities,
        };
        self.memo
            .lock()
            .expect("memo lock")
            .insert(key, result.clone());
        Ok(result)
    }

    /// Probability that fresh paths for `tuple`, started at their current
    /// states in `v`, satisfy `body` (other variables keep their paths).
    pub fn prob(
        &self,
        body: NodeId,
        tuple: &[VarId],
        v: &PathAssignment,
    ) -> Result<f64, OracleError> {
        for (var, reach) in self.formula.reads(body) {
            let needed = if tuple.contains(&var) {
                1
            } else {
                reach as usize + 1
            };
            let available = v
                .available(var)
                .ok_or_else(|| EvalError::Unmapped(self.formula.var_name(var).to_string()))?;
            if available < needed {
                return Err(EvalError::TooShort {
                    var: self.formula.var_name(var).to_string(),
                    needed,
                    available,
                }
                .into());
            }
        }
        for &var in tuple {
            if v.state(var, 0).is_none() {
                return Err(EvalError::Unmapped(self.formula.var_name(var).to_string()).into());
            }
        }
        self.check_nested_lookahead(body, tuple)?;

        let start: Vec<usize> = tuple
            .iter()
            .map(|&var| v.state(var, 0).expect("checked"))
            .collect();
        let mut frontier: BTreeMap<(Vec<usize>, Obl), f64> = BTreeMap::new();
        frontier.insert((start, self.at(body)), 1.0);
        let mut accepted = 0.0;
        let mut processed = 0usize;
        let mut t = 0usize;
        while !frontier.is_empty() {
            let mut next: BTreeMap<(Vec<usize>, Obl), f64> = BTreeMap::new();
            for ((states, obl), mass) in frontier {
                processed += 1;
                if processed > self.budget {
                    return Err(OracleError::Budget(self.budget));
                }
                let frame = Frame { tuple, v, t };
                match self.progress(&obl, &frame, &states)? {
                    Obl::Const(true) => accepted += mass,
                    Obl::Const(false) => {}
                    residual => {
                        self.expand(
                            &states,
                            0,
                            &mut Vec::with_capacity(states.len()),
                            mass,
                            &mut |s, p| {
                                *next.entry((s, residual.clone())).or_insert(0.0) += p;
                            },
                        );
                    }
                }
            }
            frontier = next;
            t += 1;
        }
        Ok(accepted.clamp(0.0, 1.0))
    }

    fn check_nested_lookahead(&self, body: NodeId, tuple: &[VarId]) -> Result<(), OracleError> {
        for p in self.formula.top_probs(body) {
            for &var in tuple {
                if self.formula.reach(p, var).is_some_and(|r| r > 0) {
                    return Err(OracleError::NestedLookahead {
                        node: p,
                        var: self.formula.var_name(var).to_string(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Calls `emit` for every joint successor of `states` with its probability.
    fn expand(
        &self,
        states: &[usize],
        i: usize,
        prefix: &mut Vec<usize>,
        mass: f64,
        emit: &mut impl FnMut(Vec<usize>, f64),
    ) {
        if i == states.len() {
            emit(prefix.clone(), mass);
            return;
        }
        for &(s, p) in self.model.successors(states[i]) {
            prefix.push(s);
            self.expand(states, i + 1, prefix, mass * p, emit);
            prefix.pop();
        }
    }

    fn at(&self, node: NodeId) -> Obl {
        match self.formula.node(node) {
            Node::Until { bound, .. } => Obl::At(node, *bound),
            _ => Obl::At(node, 0),
        }
    }

    fn progress(&self, obl: &Obl, f: &Frame<'_>, states: &[usize]) -> Result<Obl, OracleError> {
        Ok(match obl {
            Obl::Const(b) => Obl::Const(*b),
            Obl::At(node, bound) => self.step(*node, *bound, f, states)?,
            Obl::Not(a) => not(self.progress(a, f, states)?),
            Obl::And(a, b) => {
                let a = self.progress(a, f, states)?;
                if a == Obl::Const(false) {
                    return Ok(a);
                }
                and(a, self.progress(b, f, states)?)
            }
            Obl::Or(a, b) => {
                let a = self.progress(a, f, states)?;
                if a == Obl::Const(true) {
                    return Ok(a);
                }
                or(a, self.progress(b, f, states)?)
            }
        })
    }

    /// Evaluates `node` at the current step, returning what remains for the
    /// next one.
    fn step(
        &self,
        node: NodeId,
        bound: u32,
        f: &Frame<'_>,
        states: &[usize],
    ) -> Result<Obl, OracleError> {
        Ok(match self.formula.node(node) {
            Node::True => Obl::Const(true),
            Node::Atom { var, .. } => {
                let s = match f.tuple.iter().position(|x| x == var) {
                    Some(j) => states[j],
                    None => f.v.state(*var, f.t).ok_or_else(|| EvalError::TooShort {
                        var: self.formula.var_name(*var).to_string(),
                        needed: f.t + 1,
                        available: f.v.available(*var).unwrap_or(0),
                    })?,
                };
                Obl::Const(self.atoms[node.index()].is_some_and(|p| self.model.has_label(s, p)))
            }
            Node::Not(c) => not(self.step(*c, self.bound_of(*c), f, states)?),
            Node::And(l, r) => {
                let l = self.step(*l, self.bound_of(*l), f, states)?;
                if l == Obl::Const(false) {
                    return Ok(l);
                }
                and(l, self.step(*r, self.bound_of(*r), f, states)?)
            }
            Node::Next(c) => self.at(*c),
            Node::Until { left, right, .. } => {
                let r = self.step(*right, self.bound_of(*right), f, states)?;
                if bound == 0 || r == Obl::Const(true) {
                    return Ok(r);
                }
                let l = self.step(*left, self.bound_of(*left), f, states)?;
                or(r, and(l, Obl::At(node, bound - 1)))
            }
            Node::Prob { .. } => {
                let mut w = f.v.shifted(f.t);
                for (j, &var) in f.tuple.iter().enumerate() {
                    w.bind_states(var, Arc::from(vec![states[j]]));
                }
                Obl::Const(self.verdict(node, &w)?.verdict)
            }
        })
    }

    fn bound_of(&self, node: NodeId) -> u32 {
        match self.formula.node(node) {
            Node::Until { bound, .. } => *bound,
            _ => 0,
        }
    }
}

impl VerdictProvider for Oracle<'_> {
    type Error = OracleError;

    fn verdict(&self, node: NodeId, v: &PathAssignment) -> Result<bool, OracleError> {
        Ok(Oracle::verdict(self, node, v)?.verdict)
    }
}

/// Exact `Pr[tuple](body)` under `v`.
pub fn exact_prob(
    m: &Dtmc,
    formula: &HyperFormula,
    body: NodeId,
    tuple: &[VarId],
    v: &PathAssignment,
) -> Result<f64, OracleError> {
    Oracle::new(m, formula).prob(body, tuple, v)
}

/// Exact verdict of a Prob-rooted formula under `v`.
pub fn exact_verdict(
    m: &Dtmc,
    formula: &HyperFormula,
    v: &PathAssignment,
) -> Result<ExactResult, OracleError> {
    Oracle::new(m, formula).verdict(formula.root(), v)
}

/// Exact truth of any formula under `v`; Prob nodes are decided exactly.
pub fn exact_truth(
    m: &Dtmc,
    formula: &HyperFormula,
    v: &PathAssignment,
) -> Result<bool, OracleError> {
    let oracle = Oracle::new(m, formula);
    Evaluator::new(m, formula).eval(formula.root(), v, &oracle)
}

/// Reference implementation of [`exact_prob`] by enumerating every joint
/// path prefix. Exponential; for cross-checking on tiny instances.
pub fn brute_force_prob(
    m: &Dtmc,
    formula: &HyperFormula,
    body: NodeId,
    tuple: &[VarId],
    v: &PathAssignment,
) -> Result<f64, OracleError> {
    let oracle = Oracle::new(m, formula);
    let eval = Evaluator::new(m, formula);
    let lengths: Vec<usize> = tuple
        .iter()
        .map(|&var| formula.reach(body, var).unwrap_or(0) as usize)
        .collect();
    let mut paths: Vec<Vec<(Vec<usize>, f64)>> = Vec::new();
    for (&var, &len) in tuple.iter().zip(&lengths) {
        let start = v
            .state(var, 0)
            .ok_or_else(|| EvalError::Unmapped(formula.var_name(var).to_string()))?;
        let mut layer = vec![(vec![start], 1.0)];
        for _ in 0..len {
            layer = layer
                .into_iter()
                .flat_map(|(p, q)| {
                    let last = *p.last().expect("nonempty");
                    m.successors(last).iter().map(move |&(s, r)| {
                        let mut p = p.clone();
                        p.push(s);
                        (p, q * r)
                    })
                })
                .collect();
        }
        paths.push(layer);
    }
    let mut total = 0.0;
    let mut idx = vec![0usize; tuple.len()];
    loop {
        let mut w = v.clone();
        let mut mass = 1.0;
        for (j, &var) in tuple.iter().enumerate() {
            let (p, q) = &paths[j][idx[j]];
            w.bind_states(var, Arc::from(p.clone()));
            mass *= q;
        }
        if eval.eval(body, &w, &oracle)? {
            total += mass;
        }
        let mut j = 0;
        loop {
            if j == tuple.len() {
                return Ok(total);
            }
            idx[j] += 1;
            if idx[j] < paths[j].len() {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
    }
}
