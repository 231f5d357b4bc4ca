//! Discrete-time Markov chains: representation, the line-oriented text
//! format, and seeded path sampling.
//!
//! The text format is one declaration per line, `#` starts a comment:
//!
//! ```text
//! dtmc
//! state s0 labels:
//! state s1 labels: b
//! trans s0 s1 0.3
//! trans s0 s0 0.7
//! trans s1 s1 1.0
//! ```
//!
//! Declaration order of `state` lines fixes the state indices.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Absolute tolerance on every row sum of the transition function.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("transition probabilities of state `{state}` sum to {sum}, expected 1")]
    RowSum { state: String, sum: f64 },
    #[error("transition from `{src}` targets undeclared state `{dst}`")]
    DanglingSuccessor { src: String, dst: String },
    #[error("transition from undeclared state `{0}`")]
    UnknownSource(String),
    #[error("state `{0}` declared twice")]
    DuplicateState(String),
    #[error("duplicate transition `{src}` -> `{dst}`")]
    DuplicateTransition { src: String, dst: String },
    #[error("invalid probability {prob} on `{src}` -> `{dst}`")]
    InvalidProbability { src: String, dst: String, prob: f64 },
    #[error("model has no states")]
    Empty,
}

/// A finite labelled Markov chain. Immutable after construction.
#[derive(Debug, Clone)]
pub struct Dtmc {
    names: Vec<String>,
    index: HashMap<String, usize>,
    transitions: Vec<Vec<(usize, f64)>>,
    cumulative: Vec<Vec<f64>>,
    propositions: Vec<String>,
    prop_index: HashMap<String, usize>,
    labels: Vec<Vec<usize>>,
    words: usize,
    label_bits: Vec<u64>,
}

impl PartialEq for Dtmc {
    fn eq(&self, other: &Self) -> bool {
        self.names == other.names
            && self.transitions == other.transitions
            && self.propositions == other.propositions
            && self.labels == other.labels
    }
}

impl Dtmc {
    pub fn num_states(&self) -> usize {
        self.names.len()
    }

    pub fn state_name(&self, s: usize) -> &str {
        &self.names[s]
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    /// Outgoing transitions of `s` as `(successor, probability)` pairs, all
    /// with positive probability.
    pub fn successors(&self, s: usize) -> &[(usize, f64)] {
        &self.transitions[s]
    }

    /// R(s, t).
    pub fn probability(&self, s: usize, t: usize) -> f64 {
        self.transitions[s]
            .iter()
            .find(|(d, _)| *d == t)
            .map_or(0.0, |(_, p)| *p)
    }

    pub fn propositions(&self) -> &[String] {
        &self.propositions
    }

    pub fn proposition_index(&self, atom: &str) -> Option<usize> {
        self.prop_index.get(atom).copied()
    }

    /// Atoms of L(s), by name.
    pub fn labels(&self, s: usize) -> impl Iterator<Item = &str> + '_ {
        self.labels[s]
            .iter()
            .map(|&p| self.propositions[p].as_str())
    }

    /// Whether proposition number `prop` holds in `s`.
    #[inline]
    pub fn has_label(&self, s: usize, prop: usize) -> bool {
        let word = self.label_bits[s * self.words + prop / 64];
        word >> (prop % 64) & 1 == 1
    }

    pub fn has_label_named(&self, s: usize, atom: &str) -> bool {
        self.proposition_index(atom)
            .is_some_and(|p| self.has_label(s, p))
    }

    /// Draws the successor of `s` for a uniform variate `u` in `[0, 1)`.
    #[inline]
    pub fn step_with(&self, s: usize, u: f64) -> usize {
        let cum = &self.cumulative[s];
        let succ = &self.transitions[s];
        let k = cum.partition_point(|&c| c <= u);
        succ[k.min(succ.len() - 1)].0
    }

    /// Renders the model in the text format accepted by [`parse_model`].
    pub fn to_text(&self) -> String {
        let mut out = String::from("dtmc\n");
        for (s, name) in self.names.iter().enumerate() {
            let labels: Vec<&str> = self.labels(s).collect();
            let _ = writeln!(out, "state {name} labels: {}", labels.join(","));
        }
        for (s, succ) in self.transitions.iter().enumerate() {
            for &(d, p) in succ {
                let _ = writeln!(out, "trans {} {} {}", self.names[s], self.names[d], p);
            }
        }
        out
    }
}

/// Incremental construction of a [`Dtmc`]; `build` validates.
#[derive(Debug, Default)]
pub struct DtmcBuilder {
    names: Vec<String>,
    index: HashMap<String, usize>,
    labels: Vec<Vec<String>>,
    transitions: Vec<(String, String, f64)>,
}

impl DtmcBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn state<I, S>(&mut self, name: &str, labels: I) -> Result<usize, ModelError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        if self.index.contains_key(name) {
            return Err(ModelError::DuplicateState(name.to_string()));
        }
        let id = self.names.len();
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), id);
        self.labels
            .push(labels.into_iter().map(Into::into).collect());
        Ok(id)
    }

    pub fn transition(&mut self, src: &str, dst: &str, prob: f64) -> &mut Self {
        self.transitions
            .push((src.to_string(), dst.to_string(), prob));
        self
    }

    pub fn build(self) -> Result<Dtmc, ModelError> {
        if self.names.is_empty() {
            return Err(ModelError::Empty);
        }
        let n = self.names.len();
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (src, dst, p) in &self.transitions {
            let s = *self
                .index
                .get(src)
                .ok_or_else(|| ModelError::UnknownSource(src.clone()))?;
            let d = *self
                .index
                .get(dst)
                .ok_or_else(|| ModelError::DanglingSuccessor {
                    src: src.clone(),
                    dst: dst.clone(),
                })?;
            if !p.is_finite() || *p < 0.0 || *p > 1.0 {
                return Err(ModelError::InvalidProbability {
                    src: src.clone(),
                    dst: dst.clone(),
                    prob: *p,
                });
            }
            if rows[s].iter().any(|(t, _)| *t == d) {
                return Err(ModelError::DuplicateTransition {
                    src: src.clone(),
                    dst: dst.clone(),
                });
            }
            rows[s].push((d, *p));
        }
        for (s, row) in rows.iter_mut().enumerate() {
            let sum: f64 = row.iter().map(|(_, p)| p).sum();
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(ModelError::RowSum {
                    state: self.names[s].clone(),
                    sum,
                });
            }
            row.retain(|(_, p)| *p > 0.0);
        }
        let cumulative = rows
            .iter()
            .map(|row| {
                let mut acc = 0.0;
                row.iter()
                    .map(|(_, p)| {
                        acc += p;
                        acc
                    })
                    .collect()
            })
            .collect();

        let mut propositions: Vec<String> = Vec::new();
        let mut prop_index: HashMap<String, usize> = HashMap::new();
        let mut labels = Vec::with_capacity(n);
        for ls in &self.labels {
            let mut ids = Vec::with_capacity(ls.len());
            for atom in ls {
                let id = *prop_index.entry(atom.clone()).or_insert_with(|| {
                    propositions.push(atom.clone());
                    propositions.len() - 1
                });
                ids.push(id);
            }
            ids.sort_unstable();
            ids.dedup();
            labels.push(ids);
        }
        let words = propositions.len().div_ceil(64).max(1);
        let mut label_bits = vec![0u64; n * words];
        for (s, ids) in labels.iter().enumerate() {
            for &p in ids {
                label_bits[s * words + p / 64] |= 1 << (p % 64);
            }
        }
        Ok(Dtmc {
            names: self.names,
            index: self.index,
            transitions: rows,
            cumulative,
            propositions,
            prop_index,
            labels,
            words,
            label_bits,
        })
    }
}

/// Parses the line-oriented model format.
pub fn parse_model(text: &str) -> Result<Dtmc, ModelError> {
    let mut builder = DtmcBuilder::new();
    let mut seen_header = false;
    for (lineno, raw) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let syntax = |message: String| ModelError::Syntax {
            line: line_no,
            message,
        };
        let mut words = line.split_whitespace();
        let keyword = words.next().unwrap_or_default();
        if !seen_header {
            if keyword != "dtmc" || words.next().is_some() {
                return Err(syntax("expected `dtmc` header".into()));
            }
            seen_header = true;
            continue;
        }
        match keyword {
            "state" => {
                let name = words
                    .next()
                    .ok_or_else(|| syntax("missing state name".into()))?;
                let rest = line["state".len()..].trim_start()[name.len()..].trim();
                let labels = rest
                    .strip_prefix("labels:")
                    .ok_or_else(|| syntax("expected `labels:` after state name".into()))?;
                let labels: Vec<&str> = labels
                    .split(',')
                    .map(str::trim)
                    .filter(|l| !l.is_empty())
                    .collect();
                if let Some(bad) = labels.iter().find(|l| l.contains(char::is_whitespace)) {
                    return Err(syntax(format!("malformed label `{bad}`")));
                }
                builder.state(name, labels)?;
            }
            "trans" => {
                let parts: Vec<&str> = words.collect();
                let [src, dst, prob] = parts[..] else {
                    return Err(syntax("expected `trans <src> <dst> <prob>`".into()));
                };
                let p: f64 = prob
                    .parse()
                    .map_err(|_| syntax(format!("invalid probability `{prob}`")))?;
                builder.transition(src, dst, p);
            }
            "dtmc" => return Err(syntax("duplicate `dtmc` header".into())),
            other => return Err(syntax(format!("unknown declaration `{other}`"))),
        }
    }
    if !seen_header {
        return Err(ModelError::Syntax {
            line: 1,
            message: "expected `dtmc` header".into(),
        });
    }
    builder.build()
}

/// A finite path: at least one state, every step with positive probability.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FinitePath(Arc<[usize]>);

impl FinitePath {
    /// Checks the adjacency invariant against `m`.
    pub fn new(m: &Dtmc, states: Vec<usize>) -> Result<Self, PathError> {
        if states.is_empty() {
            return Err(PathError::Empty);
        }
        for &s in &states {
            if s >= m.num_states() {
                return Err(PathError::UnknownState(s));
            }
        }
        for w in states.windows(2) {
            if m.probability(w[0], w[1]) <= 0.0 {
                return Err(PathError::ZeroStep(w[0], w[1]));
            }
        }
        Ok(Self(states.into()))
    }

    /// Builds a path without checking adjacency; used for prefixes that are
    /// known to come from the sampler or from a checked path.
    pub(crate) fn from_states_unchecked(states: Vec<usize>) -> Self {
        debug_assert!(!states.is_empty());
        Self(states.into())
    }

    pub fn states(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn first(&self) -> usize {
        self.0[0]
    }

    pub(crate) fn shared(&self) -> Arc<[usize]> {
        self.0.clone()
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PathError {
    #[error("a path needs at least one state")]
    Empty,
    #[error("state index {0} out of range")]
    UnknownState(usize),
    #[error("step {0} -> {1} has probability zero")]
    ZeroStep(usize, usize),
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Folds a sequence of words into one 64-bit key.
pub fn mix_key(seed: u64, words: &[u64]) -> u64 {
    words
        .iter()
        .fold(splitmix64(seed), |acc, &w| splitmix64(acc ^ splitmix64(w)))
}

/// Independent RNG for the substream addressed by `(seed, words)`.
pub fn substream(seed: u64, words: &[u64]) -> ChaCha8Rng {
    let k = mix_key(seed, words);
    let mut bytes = [0u8; 32];
    let mut z = k;
    for chunk in bytes.chunks_mut(8) {
        z = splitmix64(z);
        chunk.copy_from_slice(&z.to_le_bytes());
    }
    ChaCha8Rng::from_seed(bytes)
}

/// Draws `length` transitions from `start` using `rng`.
pub fn sample_path<R: Rng + ?Sized>(
    m: &Dtmc,
    start: usize,
    length: usize,
    rng: &mut R,
) -> FinitePath {
    let mut states = Vec::with_capacity(length + 1);
    let mut s = start;
    states.push(s);
    for _ in 0..length {
        s = m.step_with(s, rng.gen::<f64>());
        states.push(s);
    }
    FinitePath::from_states_unchecked(states)
}

/// Master seed plus a stream counter. Each path is drawn from its own
/// counter-derived substream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeededSampler {
    seed: u64,
    counter: u64,
}

impl SeededSampler {
    pub fn new(seed: u64) -> Self {
        Self { seed, counter: 0 }
    }

    pub fn with_counter(seed: u64, counter: u64) -> Self {
        Self { seed, counter }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn counter(&self) -> u64 {
        self.counter
    }

    /// Samples one path from the next substream.
    pub fn sample_path(&mut self, m: &Dtmc, start: usize, length: usize) -> FinitePath {
        let mut rng = substream(self.seed, &[self.counter]);
        self.counter += 1;
        sample_path(m, start, length, &mut rng)
    }
}
