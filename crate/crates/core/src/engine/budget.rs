//! Error propagation through path formulae and its inversion into leaf
//! budgets for nested probability operators.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::EngineError;
use crate::logic::{HyperFormula, Node, NodeId};
use crate::stats::BoxRegion;

/// Type-I / Type-II error pair.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ErrorBudget {
    pub type1: f64,
    pub type2: f64,
}

impl ErrorBudget {
    pub const ZERO: ErrorBudget = ErrorBudget {
        type1: 0.0,
        type2: 0.0,
    };

    pub fn new(type1: f64, type2: f64) -> Self {
        Self { type1, type2 }
    }

    pub fn swapped(self) -> Self {
        Self::new(self.type2, self.type1)
    }

    pub fn max_component(self) -> f64 {
        self.type1.max(self.type2)
    }

    fn min(self, other: Self) -> Self {
        Self::new(self.type1.min(other.type1), self.type2.min(other.type2))
    }
}

/// Lifts the budgets of probabilistic leaves to the error of `node`.
///
/// A Prob node found in `leaves` takes its mapped budget; other nodes follow
/// the temporal rules (atoms and `true` contribute nothing).
pub fn propagate_errors(
    formula: &HyperFormula,
    node: NodeId,
    leaves: &HashMap<NodeId, ErrorBudget>,
) -> Result<ErrorBudget, EngineError> {
    Ok(match formula.node(node) {
        Node::True | Node::Atom { .. } => ErrorBudget::ZERO,
        Node::Not(c) => propagate_errors(formula, *c, leaves)?.swapped(),
        Node::Next(c) => propagate_errors(formula, *c, leaves)?,
        Node::And(l, r) => {
            let l = propagate_errors(formula, *l, leaves)?;
            let r = propagate_errors(formula, *r, leaves)?;
            ErrorBudget::new(l.type1 + r.type1, l.type2.max(r.type2))
        }
        Node::Until { left, right, bound } => {
            let l = propagate_errors(formula, *left, leaves)?;
            let r = propagate_errors(formula, *right, leaves)?;
            let k = *bound as f64;
            ErrorBudget::new(k * l.type1 + r.type1, (k + 1.0) * l.type2.max(r.type2))
        }
        Node::Prob { .. } => *leaves.get(&node).ok_or(EngineError::MissingBudget(node))?,
    })
}

/// Splits `target` over the outermost Prob nodes below `node` so that
/// propagating the result back yields at most `target` in both components.
pub fn allocate_budgets(
    formula: &HyperFormula,
    node: NodeId,
    target: f64,
) -> HashMap<NodeId, ErrorBudget> {
    let mut out = HashMap::new();
    allocate(formula, node, ErrorBudget::new(target, target), &mut out);
    out
}

fn allocate(
    formula: &HyperFormula,
    node: NodeId,
    quota: ErrorBudget,
    out: &mut HashMap<NodeId, ErrorBudget>,
) {
    if !formula.is_probabilistic(node) {
        return;
    }
    match formula.node(node) {
        Node::True | Node::Atom { .. } => {}
        Node::Not(c) => allocate(formula, *c, quota.swapped(), out),
        Node::Next(c) => allocate(formula, *c, quota, out),
        Node::And(l, r) => {
            let half = ErrorBudget::new(quota.type1 / 2.0, quota.type2);
            allocate(formula, *l, half, out);
            allocate(formula, *r, half, out);
        }
        Node::Until { left, right, bound } => {
            let k = *bound as f64;
            let e2 = quota.type2 / (k + 1.0);
            allocate(
                formula,
                *left,
                ErrorBudget::new(quota.type1 / (2.0 * k.max(1.0)), e2),
                out,
            );
            allocate(
                formula,
                *right,
                ErrorBudget::new(quota.type1 / 2.0, e2),
                out,
            );
        }
        Node::Prob { .. } => {
            out.entry(node)
                .and_modify(|b| *b = b.min(quota))
                .or_insert(quota);
        }
    }
}

/// Width below which an interval with interior faces counts as degenerate.
pub const DEGENERATE_WIDTH: f64 = 1e-6;

/// Indifference δ for the approximate test on `d`: `min(cap, κ·s)` where
/// `s` is the smallest per-face slack, an interval's width split among its
/// interior faces. Keeps `d` reduced by 2δ nonempty.
pub fn choose_delta(d: &BoxRegion, kappa: f64, cap: f64) -> Result<f64, EngineError> {
    let mut slack = f64::INFINITY;
    for iv in d.intervals() {
        let faces = iv.interior_faces().count();
        if faces == 0 {
            continue;
        }
        if iv.width() <= DEGENERATE_WIDTH {
            return Err(EngineError::DegenerateRegion(d.to_string()));
        }
        slack = slack.min(iv.width() / (2.0 * faces as f64));
    }
    Ok(cap.min(kappa * slack))
}
