//! HyperPCTL* formulae: arena AST, builder with desugaring, metadata used by
//! the checkers, surface-syntax parsing and evaluation on concrete paths.
//!
//! Formulae live in an arena indexed by [`NodeId`]; children always precede
//! their parents, so node ids are stable for a given construction order and
//! serve as cache keys.

mod eval;
mod parser;

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use crate::stats::{BoxRegion, StatsError};

pub use eval::{
    evaluate, prob_key, EvalError, Evaluator, NoProvider, PathAssignment, ProbKey, VerdictProvider,
};
pub use parser::parse_formula;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(u16);

impl VarId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbArg {
    pub vars: Vec<VarId>,
    pub body: NodeId,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    True,
    Atom {
        atom: String,
        var: VarId,
    },
    Not(NodeId),
    And(NodeId, NodeId),
    Next(NodeId),
    Until {
        left: NodeId,
        right: NodeId,
        bound: u32,
    },
    Prob {
        region: BoxRegion,
        args: Vec<ProbArg>,
    },
}

impl Node {
    fn children(&self) -> Vec<NodeId> {
        match self {
            Node::True | Node::Atom { .. } => vec![],
            Node::Not(c) | Node::Next(c) => vec![*c],
            Node::And(l, r) => vec![*l, *r],
            Node::Until { left, right, .. } => vec![*left, *right],
            Node::Prob { args, .. } => args.iter().map(|a| a.body).collect(),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LogicError {
    #[error("syntax error at byte {pos}: {message}")]
    Syntax { pos: usize, message: String },
    #[error("probability region has {region} intervals but {args} Pr arguments")]
    ArityMismatch { region: usize, args: usize },
    #[error("until bound at byte {pos} must be a finite natural number")]
    NonFiniteBound { pos: usize },
    #[error(transparent)]
    Region(#[from] StatsError),
    #[error("formula uses more than {} path variables", u16::MAX)]
    TooManyVariables,
}

/// A formula together with per-node metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperFormula {
    nodes: Vec<Node>,
    root: NodeId,
    vars: Vec<String>,
    depth: Vec<u32>,
    reach: Vec<Vec<Option<u32>>>,
    has_prob: Vec<bool>,
}

impl HyperFormula {
    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.index()]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node_ids(&self) -> impl Iterator<Item = NodeId> {
        (0..self.nodes.len() as u32).map(NodeId)
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn var_name(&self, v: VarId) -> &str {
        &self.vars[v.index()]
    }

    pub fn var_id(&self, name: &str) -> Option<VarId> {
        self.vars
            .iter()
            .position(|v| v == name)
            .map(|i| VarId(i as u16))
    }

    /// Steps past the current shift that evaluating `id` reads from the
    /// assignment. Probability nodes count 0: they restart from the current
    /// states.
    pub fn depth(&self, id: NodeId) -> u32 {
        self.depth[id.index()]
    }

    /// Largest offset of `var`'s assigned path read when evaluating `id`,
    /// including reads made by nested probability operators through free
    /// variables. `None` when `id` never reads `var`.
    pub fn reach(&self, id: NodeId, var: VarId) -> Option<u32> {
        self.reach[id.index()][var.index()]
    }

    /// Variables read by `id` with their reach.
    pub fn reads(&self, id: NodeId) -> impl Iterator<Item = (VarId, u32)> + '_ {
        self.reach[id.index()]
            .iter()
            .enumerate()
            .filter_map(|(v, r)| r.map(|r| (VarId(v as u16), r)))
    }

    /// Whether the subtree rooted at `id` contains a probability operator
    /// (including `id` itself).
    pub fn is_probabilistic(&self, id: NodeId) -> bool {
        self.has_prob[id.index()]
    }

    pub fn is_prob(&self, id: NodeId) -> bool {
        matches!(self.node(id), Node::Prob { .. })
    }

    /// A probability node whose arguments contain further probability nodes.
    pub fn is_nested(&self, id: NodeId) -> bool {
        match self.node(id) {
            Node::Prob { args, .. } => args.iter().any(|a| self.is_probabilistic(a.body)),
            _ => false,
        }
    }

    /// Outermost probability nodes in the subtree of `id` (`id` itself if it
    /// is one), in arena order.
    pub fn top_probs(&self, id: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(n) = stack.pop() {
            if !self.is_probabilistic(n) {
                continue;
            }
            if self.is_prob(n) {
                out.push(n);
            } else {
                stack.extend(self.node(n).children());
            }
        }
        out.sort();
        out.dedup();
        out
    }

    /// Checks that every Pr argument only mentions its own tuple or
    /// variables bound by an enclosing Pr.
    pub fn check_closed(&self) -> ClosureReport {
        let mut violations = BTreeSet::new();
        self.closed_walk(self.root, &mut Vec::new(), None, &mut violations);
        ClosureReport {
            violations: violations
                .into_iter()
                .map(|(node, var)| ClosureViolation {
                    prob: node,
                    var: self.vars[var.index()].clone(),
                })
                .collect(),
        }
    }

    fn closed_walk(
        &self,
        id: NodeId,
        scope: &mut Vec<VarId>,
        inside: Option<NodeId>,
        out: &mut BTreeSet<(NodeId, VarId)>,
    ) {
        match self.node(id) {
            Node::True => {}
            Node::Atom { var, .. } => {
                if let Some(p) = inside {
                    if !scope.contains(var) {
                        out.insert((p, *var));
                    }
                }
            }
            Node::Prob { args, .. } => {
                for a in args {
                    let mark = scope.len();
                    scope.extend(&a.vars);
                    self.closed_walk(a.body, scope, Some(id), out);
                    scope.truncate(mark);
                }
            }
            other => {
                for c in other.children() {
                    self.closed_walk(c, scope, inside, out);
                }
            }
        }
    }

    fn fmt_node(&self, id: NodeId, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node(id) {
            Node::True => f.write_str("true"),
            Node::Atom { atom, var } => write!(f, "{atom}@{}", self.var_name(*var)),
            Node::Not(c) => {
                f.write_str("!")?;
                self.fmt_node(*c, f)
            }
            Node::And(l, r) => {
                f.write_str("(")?;
                self.fmt_node(*l, f)?;
                f.write_str(" & ")?;
                self.fmt_node(*r, f)?;
                f.write_str(")")
            }
            Node::Next(c) => {
                f.write_str("X ")?;
                self.fmt_node(*c, f)
            }
            Node::Until { left, right, bound } => {
                f.write_str("(")?;
                self.fmt_node(*left, f)?;
                write!(f, " U<={bound} ")?;
                self.fmt_node(*right, f)?;
                f.write_str(")")
            }
            Node::Prob { region, args } => {
                write!(f, "P{{{region}}}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    let names: Vec<&str> = a.vars.iter().map(|v| self.var_name(*v)).collect();
                    write!(f, "Pr[{}](", names.join(","))?;
                    self.fmt_node(a.body, f)?;
                    f.write_str(")")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// Renders the core (desugared) surface syntax; the output parses back to
/// an equivalent formula.
impl fmt::Display for HyperFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_node(self.root, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClosureViolation {
    pub prob: NodeId,
    pub var: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ClosureReport {
    pub violations: Vec<ClosureViolation>,
}

impl ClosureReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Bottom-up construction of a [`HyperFormula`]. Derived operators are
/// desugared on the way in.
#[derive(Debug, Default)]
pub struct FormulaBuilder {
    nodes: Vec<Node>,
    vars: Vec<String>,
    var_index: HashMap<String, VarId>,
}

impl FormulaBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn var(&mut self, name: &str) -> Result<VarId, LogicError> {
        if let Some(&v) = self.var_index.get(name) {
            return Ok(v);
        }
        let id = u16::try_from(self.vars.len()).map_err(|_| LogicError::TooManyVariables)?;
        self.vars.push(name.to_string());
        self.var_index.insert(name.to_string(), VarId(id));
        Ok(VarId(id))
    }

    fn push(&mut self, node: Node) -> NodeId {
        self.nodes.push(node);
        NodeId(self.nodes.len() as u32 - 1)
    }

    pub fn tt(&mut self) -> NodeId {
        self.push(Node::True)
    }

    pub fn atom(&mut self, atom: &str, var: &str) -> Result<NodeId, LogicError> {
        let var = self.var(var)?;
        Ok(self.push(Node::Atom {
            atom: atom.to_string(),
            var,
        }))
    }

    pub fn not(&mut self, c: NodeId) -> NodeId {
        self.push(Node::Not(c))
    }

    pub fn and(&mut self, l: NodeId, r: NodeId) -> NodeId {
        self.push(Node::And(l, r))
    }

    /// Negation that cancels an existing `Not` instead of stacking another.
    fn negate(&mut self, c: NodeId) -> NodeId {
        match self.nodes[c.index()] {
            Node::Not(inner) => inner,
            _ => self.not(c),
        }
    }

    /// ¬(¬l ∧ ¬r)
    pub fn or(&mut self, l: NodeId, r: NodeId) -> NodeId {
        let nl = self.negate(l);
        let nr = self.negate(r);
        let both = self.and(nl, nr);
        self.not(both)
    }

    /// ¬(l ∧ ¬r)
    pub fn implies(&mut self, l: NodeId, r: NodeId) -> NodeId {
        let nr = self.negate(r);
        let both = self.and(l, nr);
        self.not(both)
    }

    pub fn next(&mut self, c: NodeId) -> NodeId {
        self.push(Node::Next(c))
    }

    pub fn until(&mut self, left: NodeId, right: NodeId, bound: u32) -> NodeId {
        self.push(Node::Until { left, right, bound })
    }

    /// ⊤ U≤k φ
    pub fn eventually(&mut self, bound: u32, c: NodeId) -> NodeId {
        let t = self.tt();
        self.until(t, c, bound)
    }

    /// ¬F≤k ¬φ
    pub fn globally(&mut self, bound: u32, c: NodeId) -> NodeId {
        let n = self.negate(c);
        let f = self.eventually(bound, n);
        self.not(f)
    }

    /// Right-nested disjunction of `items`; `None` when empty.
    pub fn any(&mut self, items: impl IntoIterator<Item = NodeId>) -> Option<NodeId> {
        let items: Vec<NodeId> = items.into_iter().collect();
        let mut it = items.into_iter().rev();
        let last = it.next()?;
        Some(it.fold(last, |acc, x| self.or(x, acc)))
    }

    pub fn prob(
        &mut self,
        region: BoxRegion,
        args: Vec<(Vec<&str>, NodeId)>,
    ) -> Result<NodeId, LogicError> {
        if region.dimension() != args.len() {
            return Err(LogicError::ArityMismatch {
                region: region.dimension(),
                args: args.len(),
            });
        }
        let mut out = Vec::with_capacity(args.len());
        for (names, body) in args {
            let vars = names
                .into_iter()
                .map(|n| self.var(n))
                .collect::<Result<Vec<_>, _>>()?;
            out.push(ProbArg { vars, body });
        }
        Ok(self.push(Node::Prob { region, args: out }))
    }

    /// Finalizes with `root`; nodes not reachable from `root` are kept.
    pub fn finish(self, root: NodeId) -> HyperFormula {
        let nv = self.vars.len();
        let n = self.nodes.len();
        let mut depth = vec![0u32; n];
        let mut reach = vec![vec![None; nv]; n];
        let mut has_prob = vec![false; n];
        let shift = |r: &[Option<u32>], by: u32| -> Vec<Option<u32>> {
            r.iter().map(|x| x.map(|x| x + by)).collect()
        };
        let join = |a: &[Option<u32>], b: &[Option<u32>]| -> Vec<Option<u32>> {
            a.iter().zip(b).map(|(x, y)| (*x).max(*y)).collect()
        };
        for i in 0..n {
            let (d, r, p) = match &self.nodes[i] {
                Node::True => (0, vec![None; nv], false),
                Node::Atom { var, .. } => {
                    let mut r = vec![None; nv];
                    r[var.index()] = Some(0);
                    (0, r, false)
                }
                Node::Not(c) => (
                    depth[c.index()],
                    reach[c.index()].clone(),
                    has_prob[c.index()],
                ),
                Node::Next(c) => (
                    depth[c.index()] + 1,
                    shift(&reach[c.index()], 1),
                    has_prob[c.index()],
                ),
                Node::And(l, r) => (
                    depth[l.index()].max(depth[r.index()]),
                    join(&reach[l.index()], &reach[r.index()]),
                    has_prob[l.index()] || has_prob[r.index()],
                ),
                Node::Until { left, right, bound } => (
                    bound + depth[left.index()].max(depth[right.index()]),
                    shift(&join(&reach[left.index()], &reach[right.index()]), *bound),
                    has_prob[left.index()] || has_prob[right.index()],
                ),
                Node::Prob { args, .. } => {
                    let mut r = vec![None; nv];
                    for a in args {
                        let mut body = reach[a.body.index()].clone();
                        for v in &a.vars {
                            body[v.index()] = Some(0);
                        }
                        r = join(&r, &body);
                    }
                    (0, r, true)
                }
            };
            depth[i] = d;
            reach[i] = r;
            has_prob[i] = p;
        }
        HyperFormula {
            nodes: self.nodes,
            root,
            vars: self.vars,
            depth,
            reach,
            has_prob,
        }
    }
}
