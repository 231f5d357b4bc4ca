//! Per-run report rows and their CSV / JSON rendering.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::engine::{Outcome, SmcVerdict};

/// One verification run. Field names double as CSV headers and JSON keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run: String,
    pub model: String,
    pub formula: String,
    pub assignment: String,
    pub method: String,
    pub alpha: f64,
    pub beta: f64,
    pub prior_a: f64,
    pub prior_b: f64,
    pub eps: f64,
    pub max_samples: u64,
    pub timeout_s: f64,
    pub seed: u64,
    pub verdict: String,
    pub reason: String,
    pub samples: f64,
    pub total_samples: f64,
    pub seconds: Option<f64>,
}

impl RunRecord {
    pub fn fill(&mut self, v: &SmcVerdict, omit_timing: bool) {
        self.verdict = v.outcome.label().to_string();
        self.reason = v.outcome.reason().to_string();
        self.samples = v.samples as f64;
        self.total_samples = v.total_samples as f64;
        self.seconds = (!omit_timing).then_some(v.seconds);
    }
}

/// Verdict shared by all runs, `mixed` otherwise.
pub fn common_verdict<'a>(verdicts: impl IntoIterator<Item = &'a str>) -> String {
    let mut it = verdicts.into_iter();
    let Some(first) = it.next() else {
        return String::new();
    };
    if it.all(|v| v == first) {
        first.to_string()
    } else {
        "mixed".to_string()
    }
}

/// Trailing row averaging samples and time over `rows`.
pub fn summary_row(rows: &[RunRecord]) -> Option<RunRecord> {
    let first = rows.first()?;
    let n = rows.len() as f64;
    let mean = |f: &dyn Fn(&RunRecord) -> f64| rows.iter().map(f).sum::<f64>() / n;
    let seconds = rows
        .iter()
        .map(|r| r.seconds)
        .collect::<Option<Vec<f64>>>()
        .map(|s| s.iter().sum::<f64>() / n);
    Some(RunRecord {
        run: "mean".into(),
        verdict: common_verdict(rows.iter().map(|r| r.verdict.as_str())),
        reason: common_verdict(rows.iter().map(|r| r.reason.as_str())),
        samples: mean(&|r| r.samples),
        total_samples: mean(&|r| r.total_samples),
        seconds,
        seed: first.seed,
        ..first.clone()
    })
}

/// Writes the runs followed by the summary row.
pub fn write_csv<W: Write>(out: W, rows: &[RunRecord]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(CliError::csv)?;
    }
    if let Some(s) = summary_row(rows) {
        w.serialize(s).map_err(CliError::csv)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct JsonReport<'a> {
    runs: &'a [RunRecord],
    summary: Option<RunRecord>,
}

pub fn write_json<W: Write>(mut out: W, rows: &[RunRecord]) -> Result<(), CliError> {
    let report = JsonReport {
        runs: rows,
        summary: summary_row(rows),
    };
    serde_json::to_writer_pretty(&mut out, &report)
        .map_err(|e| CliError::Internal(e.to_string()))?;
    writeln!(out)?;
    Ok(())
}

/// Exit status for a set of outcomes: 0 when all true, 1 when all false,
/// 2 otherwise.
pub fn exit_code(outcomes: &[Outcome]) -> i32 {
    if !outcomes.is_empty() && outcomes.iter().all(|o| *o == Outcome::True) {
        0
    } else if !outcomes.is_empty() && outcomes.iter().all(|o| *o == Outcome::False) {
        1
    } else {
        2
    }
}
