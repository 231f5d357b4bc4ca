//! Evaluation of formulae on concrete path assignments.

use std::sync::Arc;

use thiserror::Error;

use super::{HyperFormula, Node, NodeId, VarId};
use crate::model::{Dtmc, FinitePath};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("path variable '{0}' is not assigned")]
    Unmapped(String),
    #[error(
        "path for '{var}' has {available} states from the current position but {needed} are read"
    )]
    TooShort {
        var: String,
        needed: usize,
        available: usize,
    },
    #[error("formula contains a probability operator but no verdict provider was supplied")]
    NoProvider,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Binding {
    path: Arc<[usize]>,
    start: usize,
}

/// Maps path variables to paths, each viewed from a current position.
/// Shifting advances every binding at once.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathAssignment {
    slots: Vec<Option<Binding>>,
    shift: usize,
}

impl PathAssignment {
    /// Empty assignment with room for `formula`'s variables.
    pub fn new(formula: &HyperFormula) -> Self {
        Self {
            slots: vec![None; formula.vars().len()],
            shift: 0,
        }
    }

    /// Binds `var` to `path`; offset 0 is the path's first state.
    pub fn bind(&mut self, var: VarId, path: &FinitePath) {
        self.bind_states(var, path.shared());
    }

    pub(crate) fn bind_states(&mut self, var: VarId, path: Arc<[usize]>) {
        if self.slots.len() <= var.index() {
            self.slots.resize(var.index() + 1, None);
        }
        self.slots[var.index()] = Some(Binding { path, start: 0 });
    }

    /// Binds by variable name; unknown names are an error.
    pub fn bind_named(
        &mut self,
        formula: &HyperFormula,
        name: &str,
        path: &FinitePath,
    ) -> Result<(), EvalError> {
        let var = formula
            .var_id(name)
            .ok_or_else(|| EvalError::Unmapped(name.to_string()))?;
        self.bind(var, path);
        Ok(())
    }

    pub fn is_bound(&self, var: VarId) -> bool {
        matches!(self.slots.get(var.index()), Some(Some(_)))
    }

    /// Total number of steps this assignment has been shifted by.
    pub fn shift(&self) -> usize {
        self.shift
    }

    /// V^(k): every binding advanced by `k` states.
    pub fn shifted(&self, k: usize) -> Self {
        if k == 0 {
            return self.clone();
        }
        Self {
            slots: self
                .slots
                .iter()
                .map(|b| {
                    b.as_ref().map(|b| Binding {
                        path: b.path.clone(),
                        start: b.start + k,
                    })
                })
                .collect(),
            shift: self.shift + k,
        }
    }

    /// State of `var` at `offset` past the current position.
    pub fn state(&self, var: VarId, offset: usize) -> Option<usize> {
        let b = self.slots.get(var.index())?.as_ref()?;
        b.path.get(b.start + offset).copied()
    }

    /// States remaining for `var` from the current position.
    pub fn available(&self, var: VarId) -> Option<usize> {
        let b = self.slots.get(var.index())?.as_ref()?;
        Some(b.path.len().saturating_sub(b.start))
    }

    /// Keeps only `keep` states of every binding from the current position.
    pub fn truncated(&self, keep: usize) -> Self {
        Self {
            slots: self
                .slots
                .iter()
                .map(|b| {
                    b.as_ref().map(|b| {
                        let end = (b.start + keep).min(b.path.len());
                        Binding {
                            path: b.path[..end].into(),
                            start: b.start,
                        }
                    })
                })
                .collect(),
            shift: self.shift,
        }
    }
}

/// Answers probabilistic subformulae during evaluation.
pub trait VerdictProvider {
    type Error: From<EvalError>;

    /// Truth of the Prob node `node` under `v`, which is already positioned
    /// at the evaluation point.
    fn verdict(&self, node: NodeId, v: &PathAssignment) -> Result<bool, Self::Error>;
}

/// Provider for formulae without probability operators.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoProvider;

impl VerdictProvider for NoProvider {
    type Error = EvalError;

    fn verdict(&self, _node: NodeId, _v: &PathAssignment) -> Result<bool, EvalError> {
        Err(EvalError::NoProvider)
    }
}

/// Identifies one query to a Prob node: the node and every assignment state
/// its evaluation can read.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ProbKey {
    pub node: NodeId,
    pub states: Vec<u32>,
}

/// Cache key for evaluating `node` under `v`. Reads `reach + 1` states of
/// every variable `node` depends on.
pub fn prob_key(
    formula: &HyperFormula,
    node: NodeId,
    v: &PathAssignment,
) -> Result<ProbKey, EvalError> {
    let mut states = Vec::new();
    for (var, reach) in formula.reads(node) {
        check_available(formula, v, var, reach)?;
        for i in 0..=reach as usize {
            states.push(v.state(var, i).expect("length checked") as u32);
        }
    }
    Ok(ProbKey { node, states })
}

fn check_available(
    formula: &HyperFormula,
    v: &PathAssignment,
    var: VarId,
    reach: u32,
) -> Result<(), EvalError> {
    let name = || formula.var_name(var).to_string();
    let available = v
        .available(var)
        .ok_or_else(|| EvalError::Unmapped(name()))?;
    let needed = reach as usize + 1;
    if available < needed {
        return Err(EvalError::TooShort {
            var: name(),
            needed,
            available,
        });
    }
    Ok(())
}

/// Evaluates subformulae of one formula over one model.
#[derive(Debug, Clone)]
pub struct Evaluator<'a> {
    model: &'a Dtmc,
    formula: &'a HyperFormula,
    atoms: Vec<Option<usize>>,
}

impl<'a> Evaluator<'a> {
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
        }
    }

    pub fn formula(&self) -> &'a HyperFormula {
        self.formula
    }

    pub fn model(&self) -> &'a Dtmc {
        self.model
    }

    /// Truth of `node` under `v`. Every variable `node` reads must be bound
    /// with enough states; this is checked before evaluation starts.
    pub fn eval<P: VerdictProvider>(
        &self,
        node: NodeId,
        v: &PathAssignment,
        provider: &P,
    ) -> Result<bool, P::Error> {
        for (var, reach) in self.formula.reads(node) {
            check_available(self.formula, v, var, reach)?;
        }
        self.rec(node, v, 0, provider)
    }

    fn rec<P: VerdictProvider>(
        &self,
        node: NodeId,
        v: &PathAssignment,
        shift: usize,
        provider: &P,
    ) -> Result<bool, P::Error> {
        match self.formula.node(node) {
            Node::True => Ok(true),
            Node::Atom { var, .. } => {
                let Some(prop) = self.atoms[node.index()] else {
                    return Ok(false);
                };
                let s = v.state(*var, shift).ok_or_else(|| EvalError::TooShort {
                    var: self.formula.var_name(*var).to_string(),
                    needed: shift + 1,
                    available: v.available(*var).unwrap_or(0),
                })?;
                Ok(self.model.has_label(s, prop))
            }
            Node::Not(c) => Ok(!self.rec(*c, v, shift, provider)?),
            Node::And(l, r) => {
                Ok(self.rec(*l, v, shift, provider)? && self.rec(*r, v, shift, provider)?)
            }
            Node::Next(c) => self.rec(*c, v, shift + 1, provider),
            Node::Until { left, right, bound } => {
                let k = *bound as usize;
                for i in 0..=k {
                    if self.rec(*right, v, shift + i, provider)? {
                        return Ok(true);
                    }
                    if i == k || !self.rec(*left, v, shift + i, provider)? {
                        return Ok(false);
                    }
                }
                Ok(false)
            }
            Node::Prob { .. } => provider.verdict(node, &v.shifted(shift)),
        }
    }
}

/// Truth of the whole formula under `v`.
pub fn evaluate<P: VerdictProvider>(
    model: &Dtmc,
    formula: &HyperFormula,
    v: &PathAssignment,
    provider: &P,
) -> Result<bool, P::Error> {
    Evaluator::new(model, formula).eval(formula.root(), v, provider)
}
