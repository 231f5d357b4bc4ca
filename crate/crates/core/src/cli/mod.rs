//! The `hyperver` command line: verification runs, grid-world generation,
//! table experiments and exact oracle queries.
//!
//! Exit codes: 0 true, 1 false, 2 undecided, 64 usage or input error,
//! 66 unreadable or unwritable file, 70 internal failure.

mod experiment;
mod record;

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use crate::engine::{seeded_assignment, Checker, EngineError, Method, SmcConfig};
use crate::gridworld::{
    build_grid_dtmc, build_psi_ca, build_psi_goal, state_name, GridError, GridSpec, Layout, Robot,
};
use crate::logic::{parse_formula, HyperFormula, LogicError, PathAssignment};
use crate::model::{parse_model, Dtmc, FinitePath, ModelError};
use crate::oracle::{Oracle, OracleError};
use crate::stats::BetaPrior;

pub use experiment::{run_experiment, ExperimentOptions, TableRow};
pub use record::{exit_code, summary_row, write_csv, write_json, RunRecord};

pub const EXIT_TRUE: i32 = 0;
pub const EXIT_FALSE: i32 = 1;
pub const EXIT_UNDECIDED: i32 = 2;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_IO: i32 = 66;
pub const EXIT_INTERNAL: i32 = 70;

/// Environment variable capping worker threads (0 or unset = automatic).
pub const THREADS_ENV: &str = "HYPERVER_THREADS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Io { .. } => EXIT_IO,
            CliError::Internal(_) => EXIT_INTERNAL,
        }
    }

    fn csv(e: csv::Error) -> Self {
        match e.into_kind() {
            csv::ErrorKind::Io(source) => CliError::Io {
                path: "<output>".into(),
                source,
            },
            other => CliError::Internal(format!("{other:?}")),
        }
    }

    fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

impl From<io::Error> for CliError {
    fn from(source: io::Error) -> Self {
        CliError::Io {
            path: "<output>".into(),
            source,
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Usage(format!("model: {e}"))
    }
}

impl From<LogicError> for CliError {
    fn from(e: LogicError) -> Self {
        CliError::Usage(format!("formula: {e}"))
    }
}

impl From<GridError> for CliError {
    fn from(e: GridError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::Stats(_) | EngineError::MissingBudget(_) => {
                CliError::Internal(e.to_string())
            }
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::Budget(_) => CliError::Internal(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "hyperver",
    version,
    about = "Bayesian statistical model checking of HyperPCTL* on DTMCs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a formula on a model under a path assignment.
    Check(CheckArgs),
    /// Generate a grid-world model.
    Gridworld(GridArgs),
    /// Regenerate one of the benchmark tables.
    Experiment(ExperimentArgs),
    /// Compute the exact verdict of a probabilistic formula.
    Oracle(OracleArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OracleFormat {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Bayes,
    Sprt,
}

#[derive(Debug, Clone, Args)]
pub struct AssignArgs {
    /// Start states, e.g. `p1=q_0_0_1,p2=q_3_3_2`; one path per variable is
    /// sampled from each.
    #[arg(long, value_delimiter = ',')]
    pub assign: Vec<String>,
    /// Explicit path for one variable, e.g. `p1=s0,s1,s2`.
    #[arg(long = "assign-path")]
    pub assign_path: Vec<String>,
}

#[derive(Debug, Clone, Args)]
pub struct CheckArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Formula file or formula text.
    #[arg(long)]
    pub formula: String,
    #[command(flatten)]
    pub assign: AssignArgs,
    #[arg(long, default_value_t = 0.01)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.01)]
    pub beta: f64,
    /// Beta prior parameters `A,B`.
    #[arg(long, default_value = "1,1")]
    pub prior: String,
    #[arg(long, value_enum, default_value_t = MethodArg::Bayes)]
    pub method: MethodArg,
    /// SPRT indifference half-width.
    #[arg(long, default_value_t = 0.01)]
    pub eps: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long = "max-samples", default_value_t = 1_000_000)]
    pub max_samples: u64,
    /// Wall-clock limit per run in seconds; 0 disables it.
    #[arg(long = "timeout-s", default_value_t = 1800.0)]
    pub timeout_s: f64,
    #[arg(long, default_value_t = 1)]
    pub repeat: u32,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Leave the seconds column empty so output is byte-reproducible.
    #[arg(long = "omit-timing")]
    pub omit_timing: bool,
    #[arg(long = "no-cache")]
    pub no_cache: bool,
    #[arg(long, default_value_t = 0.25)]
    pub kappa: f64,
    #[arg(long = "delta-cap", default_value_t = 0.02)]
    pub delta_cap: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EmitFormula {
    Ca,
    Goal,
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    #[arg(long)]
    pub n: usize,
    /// Robots as `i,j:i,j` (start:goal), separated by `;`. Overrides the layout.
    #[arg(long)]
    pub robots: Option<String>,
    #[arg(long, default_value = "default")]
    pub layout: String,
    /// Model output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write a benchmark formula.
    #[arg(long)]
    pub emit: Option<EmitFormula>,
    #[arg(long = "formula-out")]
    pub formula_out: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    pub k: u32,
    #[arg(long, default_value_t = 0.5)]
    pub theta1: f64,
    #[arg(long, default_value_t = 0.5)]
    pub theta2: f64,
}

#[derive(Debug, Clone, Args)]
pub struct ExperimentArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
    pub table: u8,
    #[arg(long, default_value_t = 50)]
    pub runs: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long = "timeout-s", default_value_t = 1800.0)]
    pub timeout_s: f64,
    #[arg(long = "max-samples", default_value_t = 1_000_000)]
    pub max_samples: u64,
    /// Grid sizes, default 4,6,8,10.
    #[arg(long, value_delimiter = ',')]
    pub sizes: Vec<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long = "omit-timing")]
    pub omit_timing: bool,
}

#[derive(Debug, Clone, Args)]
pub struct OracleArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub formula: String,
    #[command(flatten)]
    pub assign: AssignArgs,
    /// Seed for sampling paths from `--assign` start states.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = OracleFormat::Text)]
    pub format: OracleFormat,
}

/// Entry point of the binary.
pub fn run() -> i32 {
    run_with(
        std::env::args_os(),
        &mut io::stdout().lock(),
        &mut io::stderr().lock(),
    )
}

/// Parses `args` and executes the command, writing reports to `out` and
/// diagnostics to `err`. Returns the process exit code.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = if e.use_stderr() {
                write!(err, "{}", e.render())
            } else {
                write!(out, "{}", e.render())
            };
            return code;
        }
    };
    configure_threads();
    match dispatch(cli.command, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn configure_threads() {
    let n = std::env::var(THREADS_ENV)
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .unwrap_or(0);
    if n > 0 {
        // Fails harmlessly if the pool already exists.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    match cmd {
        Command::Check(a) => cmd_check(&a, out),
        Command::Gridworld(a) => cmd_gridworld(&a, out, err),
        Command::Experiment(a) => cmd_experiment(&a, out, err),
        Command::Oracle(a) => cmd_oracle(&a, out),
    }
}

fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Reads `spec` as a file when one exists at that path, else as formula text.
pub fn load_formula(spec: &str) -> Result<HyperFormula, CliError> {
    let path = Path::new(spec);
    let text = if path.is_file() {
        read_file(path)?
    } else {
        spec.to_string()
    };
    Ok(parse_formula(text.trim())?)
}

pub fn load_model(path: &Path) -> Result<Dtmc, CliError> {
    Ok(parse_model(&read_file(path)?)?)
}

fn parse_prior(s: &str) -> Result<BetaPrior, CliError> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [a, b] = parts[..] else {
        return Err(CliError::Usage(format!(
            "prior '{s}' is not of the form A,B"
        )));
    };
    let num = |x: &str| {
        x.parse::<f64>()
            .map_err(|_| CliError::Usage(format!("prior parameter '{x}' is not a number")))
    };
    BetaPrior::new(num(a)?, num(b)?).map_err(|e| CliError::Usage(e.to_string()))
}

fn state_of(model: &Dtmc, name: &str) -> Result<usize, CliError> {
    model
        .state_index(name)
        .ok_or_else(|| CliError::Usage(format!("unknown state '{name}'")))
}

fn split_binding(s: &str) -> Result<(&str, &str), CliError> {
    s.split_once('=')
        .map(|(v, rest)| (v.trim(), rest.trim()))
        .filter(|(v, rest)| !v.is_empty() && !rest.is_empty())
        .ok_or_else(|| CliError::Usage(format!("binding '{s}' is not of the form var=state")))
}

/// How each formula variable gets its path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssignmentSpec {
    starts: Vec<(String, usize)>,
    paths: Vec<(String, Vec<usize>)>,
}

impl AssignmentSpec {
    pub fn parse(model: &Dtmc, args: &AssignArgs) -> Result<Self, CliError> {
        let mut starts = Vec::new();
        for s in args.assign.iter().filter(|s| !s.trim().is_empty()) {
            let (var, state) = split_binding(s)?;
            starts.push((var.to_string(), state_of(model, state)?));
        }
        let mut paths = Vec::new();
        for s in &args.assign_path {
            let (var, trace) = split_binding(s)?;
            let states = trace
                .split(',')
                .map(|t| state_of(model, t.trim()))
                .collect::<Result<Vec<_>, _>>()?;
            paths.push((var.to_string(), states));
        }
        Ok(Self { starts, paths })
    }

    /// Materializes the assignment; sampled paths depend on `seed`.
    pub fn build(
        &self,
        model: &Dtmc,
        formula: &HyperFormula,
        seed: u64,
    ) -> Result<PathAssignment, CliError> {
        let var = |name: &str| {
            formula
                .var_id(name)
                .ok_or_else(|| CliError::Usage(format!("formula has no path variable '{name}'")))
        };
        let starts = self
            .starts
            .iter()
            .map(|(n, s)| Ok((var(n)?, *s)))
            .collect::<Result<Vec<_>, CliError>>()?;
        let mut v = seeded_assignment(model, formula, &starts, seed);
        for (name, states) in &self.paths {
            let path = FinitePath::new(model, states.clone())
                .map_err(|e| CliError::Usage(e.to_string()))?;
            v.bind(var(name)?, &path);
        }
        Ok(v)
    }

    pub fn describe(&self, model: &Dtmc) -> String {
        let starts = self
            .starts
            .iter()
            .map(|(v, s)| format!("{v}={}", model.state_name(*s)));
        let paths = self.paths.iter().map(|(v, states)| {
            let names: Vec<&str> = states.iter().map(|&s| model.state_name(s)).collect();
            format!("{v}=[{}]", names.join(" "))
        });
        starts.chain(paths).collect::<Vec<_>>().join(",")
    }
}

fn timeout_of(secs: f64) -> Result<Option<Duration>, CliError> {
    if !(secs >= 0.0 && secs.is_finite()) {
        return Err(CliError::Usage(format!(
            "timeout {secs} must be a non-negative number"
        )));
    }
    Ok((secs > 0.0).then(|| Duration::from_secs_f64(secs)))
}

fn cmd_check(a: &CheckArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    if a.repeat == 0 {
        return Err(CliError::Usage("repeat must be at least 1".into()));
    }
    let prior = parse_prior(&a.prior)?;
    let base = SmcConfig {
        prior,
        alpha: a.alpha,
        beta: a.beta,
        kappa: a.kappa,
        delta_cap: a.delta_cap,
        max_samples: a.max_samples,
        timeout: timeout_of(a.timeout_s)?,
        seed: a.seed,
        method: match a.method {
            MethodArg::Bayes => Method::Bayes,
            MethodArg::Sprt => Method::Sprt,
        },
        sprt_eps: a.eps,
        use_cache: !a.no_cache,
    };
    base.validate()?;
    let model = load_model(&a.model)?;
    let formula = load_formula(&a.formula)?;
    let assign = AssignmentSpec::parse(&model, &a.assign)?;

    let template = RunRecord {
        run: String::new(),
        model: a.model.display().to_string(),
        formula: formula.to_string(),
        assignment: assign.describe(&model),
        method: base.method.to_string(),
        alpha: a.alpha,
        beta: a.beta,
        prior_a: prior.a(),
        prior_b: prior.b(),
        eps: a.eps,
        max_samples: a.max_samples,
        timeout_s: a.timeout_s,
        seed: a.seed,
        verdict: String::new(),
        reason: String::new(),
        samples: 0.0,
        total_samples: 0.0,
        seconds: None,
    };

    let mut rows = Vec::with_capacity(a.repeat as usize);
    let mut outcomes = Vec::with_capacity(a.repeat as usize);
    for r in 0..a.repeat {
        let seed = a.seed.wrapping_add(r as u64);
        let cfg = SmcConfig {
            seed,
            ..base.clone()
        };
        let v = assign.build(&model, &formula, seed)?;
        let verdict = Checker::new(&model, &formula, cfg)?.check(&v)?;
        let mut row = RunRecord {
            run: r.to_string(),
            seed,
            ..template.clone()
        };
        row.fill(&verdict, a.omit_timing);
        outcomes.push(verdict.outcome);
        rows.push(row);
    }

    let mut buf = Vec::new();
    match a.format {
        Format::Csv => write_csv(&mut buf, &rows)?,
        Format::Json => write_json(&mut buf, &rows)?,
    }
    emit(a.out.as_deref(), &buf, out)?;
    Ok(exit_code(&outcomes))
}

fn emit(path: Option<&Path>, bytes: &[u8], out: &mut dyn Write) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, bytes).map_err(|e| CliError::io(p, e)),
        None => Ok(out.write_all(bytes)?),
    }
}

fn parse_cell(s: &str) -> Result<(usize, usize), CliError> {
    let bad = || CliError::Usage(format!("cell '{s}' is not of the form i,j"));
    let (i, j) = s.split_once(',').ok_or_else(bad)?;
    Ok((
        i.trim().parse().map_err(|_| bad())?,
        j.trim().parse().map_err(|_| bad())?,
    ))
}

/// Parses `i,j:i,j;i,j:i,j` into robots.
pub fn parse_robots(s: &str) -> Result<Vec<Robot>, CliError> {
    s.split(';')
        .filter(|r| !r.trim().is_empty())
        .map(|r| {
            let (start, goal) = r.split_once(':').ok_or_else(|| {
                CliError::Usage(format!("robot '{r}' is not of the form i,j:i,j"))
            })?;
            Ok(Robot {
                start: parse_cell(start)?,
                goal: parse_cell(goal)?,
            })
        })
        .collect()
}

fn cmd_gridworld(a: &GridArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    let spec = match &a.robots {
        Some(r) => GridSpec::new(a.n, parse_robots(r)?)?,
        None => GridSpec::preset(a.n, a.layout.parse::<Layout>()?)?,
    };
    let model = build_grid_dtmc(&spec)?;
    let assignment = spec
        .robots
        .iter()
        .enumerate()
        .map(|(idx, r)| format!("p{}={}", idx + 1, state_name(r.start, idx + 1)))
        .collect::<Vec<_>>()
        .join(",");

    let formula = match a.emit {
        Some(EmitFormula::Ca) => Some(build_psi_ca(a.n, a.k, a.theta1)?),
        Some(EmitFormula::Goal) => Some(build_psi_goal(a.n, a.k, a.theta1, a.theta2, 1)?),
        None => None,
    };

    match &a.out {
        Some(p) => {
            write_file(p, &model.to_text())?;
            writeln!(out, "{assignment}")?;
        }
        None => {
            out.write_all(model.to_text().as_bytes())?;
            writeln!(err, "{assignment}")?;
        }
    }
    if let Some(f) = formula {
        match &a.formula_out {
            Some(p) => write_file(p, &format!("{f}\n"))?,
            None => writeln!(err, "{f}")?,
        }
    }
    Ok(0)
}

fn cmd_experiment(
    a: &ExperimentArgs,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, CliError> {
    if a.runs == 0 {
        return Err(CliError::Usage("runs must be at least 1".into()));
    }
    let opts = ExperimentOptions {
        table: a.table,
        runs: a.runs,
        seed: a.seed,
        timeout: timeout_of(a.timeout_s)?,
        max_samples: a.max_samples,
        sizes: if a.sizes.is_empty() {
            vec![4, 6, 8, 10]
        } else {
            a.sizes.clone()
        },
        omit_timing: a.omit_timing,
    };
    let rows = run_experiment(&opts, &mut |row: &TableRow| {
        let _ = writeln!(
            err,
            "n={} K={} alpha={} method={} prior={} -> {}",
            row.n, row.k, row.alpha, row.method, row.prior, row.status
        );
    })?;
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &rows {
        w.serialize(r).map_err(CliError::csv)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::Internal(e.to_string()))?;
    emit(a.out.as_deref(), &bytes, out)?;
    Ok(0)
}

#[derive(Serialize)]
struct OracleReport<'a> {
    formula: String,
    assignment: String,
    probabilities: &'a [f64],
    verdict: bool,
    boundary_distance: Option<f64>,
    on_boundary: bool,
}

fn cmd_oracle(a: &OracleArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let model = load_model(&a.model)?;
    let formula = load_formula(&a.formula)?;
    let assign = AssignmentSpec::parse(&model, &a.assign)?;
    let v = assign.build(&model, &formula, a.seed)?;
    let res = Oracle::new(&model, &formula).verdict(formula.root(), &v)?;
    let report = OracleReport {
        formula: formula.to_string(),
        assignment: assign.describe(&model),
        probabilities: &res.probabilities,
        verdict: res.verdict,
        boundary_distance: res
            .boundary_distance
            .is_finite()
            .then_some(res.boundary_distance),
        on_boundary: res.on_boundary,
    };
    match a.format {
        OracleFormat::Json => {
            serde_json::to_writer_pretty(&mut *out, &report)
                .map_err(|e| CliError::Internal(e.to_string()))?;
            writeln!(out)?;
        }
        OracleFormat::Text => {
            let probs: Vec<String> = res.probabilities.iter().map(|p| format!("{p}")).collect();
            writeln!(out, "probabilities: {}", probs.join(" "))?;
            writeln!(out, "verdict: {}", res.verdict)?;
            match report.boundary_distance {
                Some(d) => writeln!(out, "boundary distance: {d}")?,
                None => writeln!(out, "boundary distance: inf")?,
            }
            if res.on_boundary {
                writeln!(out, "warning: on the region boundary")?;
            }
        }
    }
    Ok(if res.verdict { EXIT_TRUE } else { EXIT_FALSE })
}
