//! Benchmark tables over generated grid worlds.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::engine::{seeded_assignment, Checker, Method, Outcome, SmcConfig};
use crate::gridworld::{build_grid_dtmc, build_psi_ca, build_psi_goal, GridSpec, Layout};
use crate::logic::{HyperFormula, VarId};
use crate::stats::BetaPrior;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOptions {
    /// 1 = priors on ψ_goal, 2 = ψ_ca with SPRT, 3 = ψ_goal with θ1 = 0.3.
    pub table: u8,
    pub runs: u32,
    pub seed: u64,
    pub timeout: Option<Duration>,
    pub max_samples: u64,
    pub sizes: Vec<usize>,
    pub omit_timing: bool,
}

/// One aggregated table cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub n: usize,
    #[serde(rename = "K")]
    pub k: u32,
    pub alpha: f64,
    pub beta: f64,
    pub method: String,
    pub prior: String,
    /// Mean final sample size over decided runs.
    pub mean_samples: Option<f64>,
    pub mean_time_s: Option<f64>,
    pub status: String,
    pub undecided_rate: f64,
}

#[derive(Debug, Clone, Copy)]
enum Prop {
    Ca { theta: f64 },
    Goal { theta1: f64, theta2: f64 },
}

#[derive(Debug, Clone)]
struct Cell {
    n: usize,
    k: u32,
    error: f64,
    method: Method,
    eps: f64,
    prior: (f64, f64),
    layout: Layout,
    prop: Prop,
}

const PRIORS: [(f64, f64); 4] = [(1.0, 1.0), (5.0, 2.0), (2.0, 5.0), (2.0, 2.0)];
const ERRORS: [f64; 2] = [0.01, 0.001];
const BOUNDS: [u32; 2] = [3, 8];

fn goal_layout(n: usize, moved: Layout) -> Layout {
    if n == 4 || n == 8 {
        moved
    } else {
        Layout::Default
    }
}

fn cells(opts: &ExperimentOptions) -> Vec<Cell> {
    let mut out = Vec::new();
    for &n in &opts.sizes {
        match opts.table {
            1 => {
                for prior in PRIORS {
                    out.push(Cell {
                        n,
                        k: 8,
                        error: 0.01,
                        method: Method::Bayes,
                        eps: 0.0,
                        prior,
                        layout: goal_layout(n, Layout::Goal11),
                        prop: Prop::Goal {
                            theta1: 0.5,
                            theta2: 0.5,
                        },
                    });
                }
            }
            2 => {
                for error in ERRORS {
                    for k in BOUNDS {
                        let methods = [
                            (Method::Bayes, 0.0),
                            (Method::Sprt, 0.01),
                            (Method::Sprt, 0.001),
                        ];
                        for (method, eps) in methods {
                            out.push(Cell {
                                n,
                                k,
                                error,
                                method,
                                eps,
                                prior: (1.0, 1.0),
                                layout: Layout::Default,
                                prop: Prop::Ca { theta: 0.5 },
                            });
                        }
                    }
                }
            }
            _ => {
                for error in ERRORS {
                    for k in BOUNDS {
                        out.push(Cell {
                            n,
                            k,
                            error,
                            method: Method::Bayes,
                            eps: 0.0,
                            prior: (1.0, 1.0),
                            layout: goal_layout(n, Layout::Goal01),
                            prop: Prop::Goal {
                                theta1: 0.3,
                                theta2: 0.5,
                            },
                        });
                    }
                }
            }
        }
    }
    out
}

fn method_label(c: &Cell) -> String {
    match c.method {
        Method::Bayes => "bayes".into(),
        Method::Sprt => format!("sprt(eps={})", c.eps),
    }
}

/// Table status: the shared verdict of the decided runs, `UNDECIDED` when
/// none decided, `MIXED` when decided runs disagree.
fn status(outcomes: &[Outcome]) -> String {
    let decided: Vec<bool> = outcomes.iter().filter_map(|o| o.as_bool()).collect();
    match decided.first() {
        None => "UNDECIDED".into(),
        Some(&first) if decided.iter().all(|&d| d == first) => {
            if first { "TRUE" } else { "FALSE" }.into()
        }
        Some(_) => "MIXED".into(),
    }
}

fn run_cell(c: &Cell, opts: &ExperimentOptions) -> Result<TableRow, CliError> {
    let spec = GridSpec::preset(c.n, c.layout)?;
    let model = build_grid_dtmc(&spec)?;
    let formula: HyperFormula = match c.prop {
        Prop::Ca { theta } => build_psi_ca(c.n, c.k, theta)?,
        Prop::Goal { theta1, theta2 } => build_psi_goal(c.n, c.k, theta1, theta2, 1)?,
    };
    let starts: Vec<(VarId, usize)> = ["p1", "p2"]
        .iter()
        .enumerate()
        .filter_map(|(i, name)| formula.var_id(name).map(|v| (v, spec.start_state(i + 1))))
        .collect();
    let prior =
        BetaPrior::new(c.prior.0, c.prior.1).map_err(|e| CliError::Internal(e.to_string()))?;

    let mut outcomes = Vec::with_capacity(opts.runs as usize);
    let mut samples = Vec::new();
    let mut seconds = 0.0;
    for r in 0..opts.runs {
        let seed = opts.seed.wrapping_add(r as u64);
        let cfg = SmcConfig {
            prior,
            alpha: c.error,
            beta: c.error,
            max_samples: opts.max_samples,
            timeout: opts.timeout,
            seed,
            method: c.method,
            sprt_eps: if c.method == Method::Sprt {
                c.eps
            } else {
                0.01
            },
            ..SmcConfig::default()
        };
        let v = seeded_assignment(&model, &formula, &starts, seed);
        let verdict = Checker::new(&model, &formula, cfg)?.check(&v)?;
        if verdict.outcome.is_decided() {
            samples.push(verdict.samples as f64);
        }
        seconds += verdict.seconds;
        outcomes.push(verdict.outcome);
    }
    let runs = opts.runs as f64;
    let undecided = outcomes.iter().filter(|o| !o.is_decided()).count() as f64;
    Ok(TableRow {
        n: c.n,
        k: c.k,
        alpha: c.error,
        beta: c.error,
        method: method_label(c),
        prior: format!("beta({},{})", c.prior.0, c.prior.1),
        mean_samples: (!samples.is_empty())
            .then(|| samples.iter().sum::<f64>() / samples.len() as f64),
        mean_time_s: (!opts.omit_timing).then_some(seconds / runs),
        status: status(&outcomes),
        undecided_rate: undecided / runs,
    })
}

/// Runs every cell of the chosen table in a fixed order, calling `progress`
/// after each one.
pub fn run_experiment(
    opts: &ExperimentOptions,
    progress: &mut dyn FnMut(&TableRow),
) -> Result<Vec<TableRow>, CliError> {
    if !(1..=3).contains(&opts.table) {
        return Err(CliError::Usage(format!("no table {}", opts.table)));
    }
    let mut rows = Vec::new();
    for c in cells(opts) {
        let row = run_cell(&c, opts)?;
        progress(&row);
        rows.push(row);
    }
    Ok(rows)
}
