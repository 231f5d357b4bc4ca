//! n×n grid world with independent random-walking robots, and the
//! collision-avoidance and goal-reaching formulae over it.
//!
//! State `q_{i}_{j}_{k}` is robot `k` (1-based) in cell `(i, j)`. It carries
//! the cell atom `a_{i}_{j}` and, on robot `k`'s goal cell, `g_{k}`. States
//! are ordered robot-major, then row, then column.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::logic::{FormulaBuilder, HyperFormula, LogicError, NodeId};
use crate::model::{Dtmc, DtmcBuilder, ModelError};
use crate::stats::BoxRegion;

pub type Cell = (usize, usize);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("grid side must be at least 1")]
    EmptyGrid,
    #[error("at least one robot is required")]
    NoRobots,
    #[error("cell ({0}, {1}) lies outside the {2}x{2} grid")]
    CellOutOfRange(usize, usize, usize),
    #[error("threshold {0} is not in [0, 1]")]
    Threshold(f64),
    #[error("robot index {0} is not 1 or 2")]
    Robot(usize),
    #[error("unknown layout '{0}' (expected default, goal11 or goal01)")]
    UnknownLayout(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Logic(#[from] LogicError),
}

/// How a robot picks its next cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MovePolicy {
    /// Each orthogonal neighbour with equal probability.
    #[default]
    UniformOverFeasible,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Robot {
    pub start: Cell,
    pub goal: Cell,
}

/// Named robot placements used by the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Layout {
    /// Robots at opposite corners; robot 1 heads to (0, n−1), robot 2 to (n−1, 0).
    #[default]
    Default,
    /// As `Default` with robot 1's goal at (1, 1).
    Goal11,
    /// As `Default` with robot 1's goal at (0, 1).
    Goal01,
}

impl FromStr for Layout {
    type Err = GridError;

    fn from_str(s: &str) -> Result<Self, GridError> {
        match s {
            "default" => Ok(Layout::Default),
            "goal11" => Ok(Layout::Goal11),
            "goal01" => Ok(Layout::Goal01),
            other => Err(GridError::UnknownLayout(other.to_string())),
        }
    }
}

impl fmt::Display for Layout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Layout::Default => "default",
            Layout::Goal11 => "goal11",
            Layout::Goal01 => "goal01",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridSpec {
    pub n: usize,
    pub robots: Vec<Robot>,
    pub policy: MovePolicy,
}

impl GridSpec {
    pub fn new(n: usize, robots: Vec<Robot>) -> Result<Self, GridError> {
        let spec = Self {
            n,
            robots,
            policy: MovePolicy::default(),
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Two robots placed according to `layout`.
    pub fn preset(n: usize, layout: Layout) -> Result<Self, GridError> {
        if n == 0 {
            return Err(GridError::EmptyGrid);
        }
        let last = n - 1;
        let goal1 = match layout {
            Layout::Default => (0, last),
            Layout::Goal11 => (1, 1),
            Layout::Goal01 => (0, 1),
        };
        Self::new(
            n,
            vec![
                Robot {
                    start: (0, 0),
                    goal: goal1,
                },
                Robot {
                    start: (last, last),
                    goal: (last, 0),
                },
            ],
        )
    }

    pub fn validate(&self) -> Result<(), GridError> {
        if self.n == 0 {
            return Err(GridError::EmptyGrid);
        }
        if self.robots.is_empty() {
            return Err(GridError::NoRobots);
        }
        for r in &self.robots {
            for (i, j) in [r.start, r.goal] {
                if i >= self.n || j >= self.n {
                    return Err(GridError::CellOutOfRange(i, j, self.n));
                }
            }
        }
        Ok(())
    }

    /// Index of robot `k` (1-based) in cell `c` in the generated model.
    pub fn state_index(&self, c: Cell, k: usize) -> usize {
        (k - 1) * self.n * self.n + c.0 * self.n + c.1
    }

    /// Start state of robot `k` (1-based).
    pub fn start_state(&self, k: usize) -> usize {
        self.state_index(self.robots[k - 1].start, k)
    }

    fn neighbours(&self, (i, j): Cell) -> Vec<Cell> {
        let mut out = Vec::with_capacity(4);
        if i > 0 {
            out.push((i - 1, j));
        }
        if i + 1 < self.n {
            out.push((i + 1, j));
        }
        if j > 0 {
            out.push((i, j - 1));
        }
        if j + 1 < self.n {
            out.push((i, j + 1));
        }
        out
    }
}

pub fn state_name(c: Cell, k: usize) -> String {
    format!("q_{}_{}_{}", c.0, c.1, k)
}

pub fn cell_atom(c: Cell) -> String {
    format!("a_{}_{}", c.0, c.1)
}

pub fn goal_atom(k: usize) -> String {
    format!("g_{k}")
}

/// Generates the product-free DTMC holding one copy of the grid per robot.
pub fn build_grid_dtmc(spec: &GridSpec) -> Result<Dtmc, GridError> {
    spec.validate()?;
    let mut b = DtmcBuilder::new();
    let cells: Vec<Cell> = (0..spec.n)
        .flat_map(|i| (0..spec.n).map(move |j| (i, j)))
        .collect();
    for (idx, r) in spec.robots.iter().enumerate() {
        let k = idx + 1;
        for &c in &cells {
            let mut labels = vec![cell_atom(c)];
            if c == r.goal {
                labels.push(goal_atom(k));
            }
            b.state(&state_name(c, k), labels)?;
        }
    }
    for k in 1..=spec.robots.len() {
        for &c in &cells {
            let src = state_name(c, k);
            let next = spec.neighbours(c);
            match spec.policy {
                MovePolicy::UniformOverFeasible if next.is_empty() => {
                    b.transition(&src, &src, 1.0);
                }
                MovePolicy::UniformOverFeasible => {
                    let p = 1.0 / next.len() as f64;
                    for d in next {
                        b.transition(&src, &state_name(d, k), p);
                    }
                }
            }
        }
    }
    Ok(b.build()?)
}

fn check_threshold(t: f64) -> Result<(), GridError> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(GridError::Threshold(t))
    }
}

/// ⋁_{i,j} (a_ij@x ∧ a_ij@y)
fn same_cell(b: &mut FormulaBuilder, n: usize, x: &str, y: &str) -> Result<NodeId, GridError> {
    let mut items = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let atom = cell_atom((i, j));
            let l = b.atom(&atom, x)?;
            let r = b.atom(&atom, y)?;
            items.push(b.and(l, r));
        }
    }
    Ok(b.any(items).expect("grid has at least one cell"))
}

/// P{[0,θ]}(Pr[p1,p2](F<=K ⋁_{i,j}(a_ij@p1 ∧ a_ij@p2)))
pub fn build_psi_ca(n: usize, k: u32, theta: f64) -> Result<HyperFormula, GridError> {
    if n == 0 {
        return Err(GridError::EmptyGrid);
    }
    check_threshold(theta)?;
    let mut b = FormulaBuilder::new();
    let meet = same_cell(&mut b, n, "p1", "p2")?;
    let body = b.eventually(k, meet);
    let region = BoxRegion::from_bounds(&[(0.0, theta)]).map_err(LogicError::from)?;
    let root = b.prob(region, vec![(vec!["p1", "p2"], body)])?;
    Ok(b.finish(root))
}

/// P{[θ1,1]}(Pr[p1](ψ_nocol U<=K g_1@p1)) with
/// ψ_nocol = P{[θ2,1]}(Pr[p2](¬⋁_{i,j}(a_ij@p1 ∧ a_ij@p2))).
/// For robot 2 the roles of p1 and p2 swap and the goal atom is g_2.
pub fn build_psi_goal(
    n: usize,
    k: u32,
    theta1: f64,
    theta2: f64,
    robot: usize,
) -> Result<HyperFormula, GridError> {
    if n == 0 {
        return Err(GridError::EmptyGrid);
    }
    check_threshold(theta1)?;
    check_threshold(theta2)?;
    let (me, other) = match robot {
        1 => ("p1", "p2"),
        2 => ("p2", "p1"),
        r => return Err(GridError::Robot(r)),
    };
    let mut b = FormulaBuilder::new();
    let meet = same_cell(&mut b, n, me, other)?;
    let apart = b.not(meet);
    let inner_region = BoxRegion::from_bounds(&[(theta2, 1.0)]).map_err(LogicError::from)?;
    let nocol = b.prob(inner_region, vec![(vec![other], apart)])?;
    let goal = b.atom(&goal_atom(robot), me)?;
    let body = b.until(nocol, goal, k);
    let outer_region = BoxRegion::from_bounds(&[(theta1, 1.0)]).map_err(LogicError::from)?;
    let root = b.prob(outer_region, vec![(vec![me], body)])?;
    Ok(b.finish(root))
}
