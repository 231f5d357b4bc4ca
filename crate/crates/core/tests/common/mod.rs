//! Reference implementations and random instance generators shared by the
//! property, CLI and acceptance tests. Nothing here calls into the library's
//! semantics: formulae are rendered to text, models to the model format, and
//! truth values are recomputed from first principles.

#![allow(dead_code)]

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::Rng;

use hyperver::logic::{parse_formula, HyperFormula, PathAssignment};
use hyperver::model::{parse_model, Dtmc, FinitePath};

pub const VARS: [&str; 3] = ["p", "q", "r"];
pub const ATOMS: [&str; 2] = ["a", "b"];

// ---------------------------------------------------------------------------
// Models

/// A small labelled chain, kept independently of the library's `Dtmc`.
#[derive(Debug, Clone)]
pub struct TModel {
    pub labels: Vec<[bool; 2]>,
    pub trans: Vec<Vec<(usize, f64)>>,
}

impl TModel {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn name(s: usize) -> String {
        format!("s{s}")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("dtmc\n");
        for (s, l) in self.labels.iter().enumerate() {
            let names: Vec<&str> = ATOMS
                .iter()
                .zip(l)
                .filter(|(_, &on)| on)
                .map(|(a, _)| *a)
                .collect();
            writeln!(out, "state {} labels: {}", Self::name(s), names.join(",")).unwrap();
        }
        for (s, row) in self.trans.iter().enumerate() {
            for &(t, p) in row {
                writeln!(out, "trans {} {} {}", Self::name(s), Self::name(t), p).unwrap();
            }
        }
        out
    }

    pub fn to_dtmc(&self) -> Dtmc {
        parse_model(&self.to_text()).expect("generated model parses")
    }

    /// The same chain with state `s` renamed to position `perm[s]`.
    pub fn permuted(&self, perm: &[usize]) -> TModel {
        let n = self.len();
        let mut labels = vec![[false; 2]; n];
        let mut trans = vec![Vec::new(); n];
        for s in 0..n {
            labels[perm[s]] = self.labels[s];
            trans[perm[s]] = self.trans[s].iter().map(|&(t, p)| (perm[t], p)).collect();
        }
        TModel { labels, trans }
    }

    /// Every path with `steps` transitions from `s`, with its probability.
    pub fn paths_from(&self, s: usize, steps: usize) -> Vec<(Vec<usize>, f64)> {
        let mut layer = vec![(vec![s], 1.0)];
        for _ in 0..steps {
            let mut next = Vec::new();
            for (p, q) in layer {
                let last = *p.last().unwrap();
                for &(t, r) in &self.trans[last] {
                    let mut p2 = p.clone();
                    p2.push(t);
                    next.push((p2, q * r));
                }
            }
            layer = next;
        }
        layer
    }
}

/// Random chain with `2..=max_states` states and at most `max_out`
/// successors per state. Probabilities are multiples of 1/8 so rows sum to
/// one exactly.
pub fn random_model<R: Rng>(rng: &mut R, max_states: usize, max_out: usize) -> TModel {
    let n = rng.gen_range(2..=max_states);
    let labels = (0..n)
        .map(|_| [rng.gen_bool(0.5), rng.gen_bool(0.5)])
        .collect();
    let trans = (0..n)
        .map(|_| {
            let k = rng.gen_range(1..=max_out.min(n));
            let mut succ: Vec<usize> = (0..n).collect();
            succ.shuffle(rng);
            succ.truncate(k);
            // Split 8 eighths among k successors, each at least one.
            let mut parts = vec![1u32; k];
            for _ in 0..(8 - k as u32) {
                parts[rng.gen_range(0..k)] += 1;
            }
            succ.into_iter()
                .zip(parts)
                .map(|(t, e)| (t, e as f64 / 8.0))
                .collect()
        })
        .collect();
    TModel { labels, trans }
}

// ---------------------------------------------------------------------------
// Formulae

#[derive(Debug, Clone)]
pub enum F {
    True,
    Atom(usize, usize),
    Not(Box<F>),
    And(Box<F>, Box<F>),
    Or(Box<F>, Box<F>),
    Implies(Box<F>, Box<F>),
    Next(Box<F>),
    Until(Box<F>, Box<F>, u32),
    Ev(u32, Box<F>),
    Glob(u32, Box<F>),
    Prob {
        region: Vec<(f64, f64)>,
        args: Vec<(Vec<usize>, F)>,
    },
}

fn num(x: f64) -> String {
    format!("{x}")
}

impl F {
    pub fn text(&self) -> String {
        match self {
            F::True => "true".into(),
            F::Atom(a, v) => format!("{}@{}", ATOMS[*a], VARS[*v]),
            F::Not(c) => format!("!{}", c.text()),
            F::And(l, r) => format!("({} & {})", l.text(), r.text()),
            F::Or(l, r) => format!("({} | {})", l.text(), r.text()),
            F::Implies(l, r) => format!("({} -> {})", l.text(), r.text()),
            F::Next(c) => format!("X {}", c.text()),
            F::Until(l, r, k) => format!("({} U<={k} {})", l.text(), r.text()),
            F::Ev(k, c) => format!("F<={k} {}", c.text()),
            F::Glob(k, c) => format!("G<={k} {}", c.text()),
            F::Prob { region, args } => {
                let reg: Vec<String> = region
                    .iter()
                    .map(|(l, u)| format!("[{},{}]", num(*l), num(*u)))
                    .collect();
                let a: Vec<String> = args
                    .iter()
                    .map(|(vs, b)| {
                        let names: Vec<&str> = vs.iter().map(|&v| VARS[v]).collect();
                        format!("Pr[{}]({})", names.join(","), b.text())
                    })
                    .collect();
                format!("P{{{}}}({})", reg.join(","), a.join(", "))
            }
        }
    }

    pub fn parse(&self) -> HyperFormula {
        let t = self.text();
        parse_formula(&t).unwrap_or_else(|e| panic!("{t}: {e}"))
    }

    /// Steps of lookahead, counting a Prob body's own lookahead so that
    /// free variables read inside it stay in range.
    pub fn horizon(&self) -> usize {
        match self {
            F::True | F::Atom(..) => 0,
            F::Not(c) => c.horizon(),
            F::And(l, r) | F::Or(l, r) | F::Implies(l, r) => l.horizon().max(r.horizon()),
            F::Next(c) => 1 + c.horizon(),
            F::Until(l, r, k) => *k as usize + l.horizon().max(r.horizon()),
            F::Ev(k, c) | F::Glob(k, c) => *k as usize + c.horizon(),
            F::Prob { args, .. } => args.iter().map(|(_, b)| b.horizon()).max().unwrap_or(0),
        }
    }

    /// Variables that appear in atoms.
    pub fn mentioned(&self, out: &mut Vec<usize>) {
        match self {
            F::True => {}
            F::Atom(_, v) => {
                if !out.contains(v) {
                    out.push(*v)
                }
            }
            F::Not(c) | F::Next(c) | F::Ev(_, c) | F::Glob(_, c) => c.mentioned(out),
            F::And(l, r) | F::Or(l, r) | F::Implies(l, r) | F::Until(l, r, _) => {
                l.mentioned(out);
                r.mentioned(out);
            }
            F::Prob { args, .. } => {
                for (vs, b) in args {
                    for v in vs {
                        if !out.contains(v) {
                            out.push(*v)
                        }
                    }
                    b.mentioned(out);
                }
            }
        }
    }
}

fn bx(f: F) -> Box<F> {
    Box::new(f)
}

/// Random Prob-free path formula over `vars` with horizon at most `budget`.
pub fn random_path_formula<R: Rng>(rng: &mut R, vars: &[usize], budget: u32, size: u32) -> F {
    if size == 0 || rng.gen_bool(0.2) {
        return if rng.gen_bool(0.1) {
            F::True
        } else {
            F::Atom(rng.gen_range(0..ATOMS.len()), *vars.choose(rng).unwrap())
        };
    }
    let s = size - 1;
    match rng.gen_range(0..9) {
        0 => F::Not(bx(random_path_formula(rng, vars, budget, s))),
        1 => F::And(
            bx(random_path_formula(rng, vars, budget, s)),
            bx(random_path_formula(rng, vars, budget, s)),
        ),
        2 => F::Or(
            bx(random_path_formula(rng, vars, budget, s)),
            bx(random_path_formula(rng, vars, budget, s)),
        ),
        3 => F::Implies(
            bx(random_path_formula(rng, vars, budget, s)),
            bx(random_path_formula(rng, vars, budget, s)),
        ),
        4 | 5 if budget >= 1 => F::Next(bx(random_path_formula(rng, vars, budget - 1, s))),
        6 => {
            let k = rng.gen_range(0..=budget);
            F::Until(
                bx(random_path_formula(rng, vars, budget - k, s)),
                bx(random_path_formula(rng, vars, budget - k, s)),
                k,
            )
        }
        7 => {
            let k = rng.gen_range(0..=budget);
            F::Ev(k, bx(random_path_formula(rng, vars, budget - k, s)))
        }
        8 => {
            let k = rng.gen_range(0..=budget);
            F::Glob(k, bx(random_path_formula(rng, vars, budget - k, s)))
        }
        _ => F::Atom(rng.gen_range(0..ATOMS.len()), *vars.choose(rng).unwrap()),
    }
}

/// Interval of width at least 0.1 on the 0.05 grid, never the full cube
/// side.
pub fn random_interval<R: Rng>(rng: &mut R) -> (f64, f64) {
    loop {
        let lo = rng.gen_range(0..=18) as f64 * 0.05;
        let hi = rng.gen_range(((lo / 0.05).round() as i32 + 2)..=20) as f64 * 0.05;
        let (lo, hi) = ((lo * 100.0).round() / 100.0, (hi * 100.0).round() / 100.0);
        if !(lo == 0.0 && hi == 1.0) {
            return (lo, hi);
        }
    }
}

/// Non-nested Prob formula with one or two arguments over `p` and `q`.
pub fn random_flat_prob<R: Rng>(rng: &mut R, budget: u32) -> F {
    let dims = if rng.gen_bool(0.25) { 2 } else { 1 };
    let args = (0..dims)
        .map(|_| {
            let tuple: Vec<usize> = if rng.gen_bool(0.5) {
                vec![0]
            } else {
                vec![0, 1]
            };
            let body = random_path_formula(rng, &tuple, budget, 3);
            (tuple, body)
        })
        .collect();
    F::Prob {
        region: (0..dims).map(|_| random_interval(rng)).collect(),
        args,
    }
}

/// Prob formula whose body contains an inner Prob over `q`; the inner body
/// may read the outer tuple variable `p` at its current state only.
pub fn random_nested_prob<R: Rng>(rng: &mut R) -> F {
    let inner_body = random_path_formula(rng, &[1], 2, 2);
    let inner_body = if rng.gen_bool(0.5) {
        F::And(bx(F::Atom(rng.gen_range(0..2), 0)), bx(inner_body))
    } else {
        inner_body
    };
    let inner = F::Prob {
        region: vec![random_interval(rng)],
        args: vec![(vec![1], inner_body)],
    };
    let other = random_path_formula(rng, &[0], 1, 1);
    let k = rng.gen_range(0..=2);
    let body = match rng.gen_range(0..4) {
        0 => F::Until(bx(inner), bx(other), k),
        1 => F::Until(bx(other), bx(inner), k),
        2 => F::And(bx(other), bx(F::Next(bx(inner)))),
        _ => F::Ev(k, bx(inner)),
    };
    F::Prob {
        region: vec![random_interval(rng)],
        args: vec![(vec![0], body)],
    }
}

// ---------------------------------------------------------------------------
// Brute-force semantics

/// A probability came within this distance of a region face, where float
/// rounding could legitimately flip the verdict.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NearBoundary;

pub const NEAR: f64 = 1e-9;

/// Truth of `f` at position `j` with `paths[v]` the path of variable `v`.
pub fn holds(m: &TModel, f: &F, paths: &[Vec<usize>], j: usize) -> Result<bool, NearBoundary> {
    Ok(match f {
        F::True => true,
        F::Atom(a, v) => m.labels[paths[*v][j]][*a],
        F::Not(c) => !holds(m, c, paths, j)?,
        F::And(l, r) => holds(m, l, paths, j)? & holds(m, r, paths, j)?,
        F::Or(l, r) => holds(m, l, paths, j)? | holds(m, r, paths, j)?,
        F::Implies(l, r) => !holds(m, l, paths, j)? | holds(m, r, paths, j)?,
        F::Next(c) => holds(m, c, paths, j + 1)?,
        F::Until(l, r, k) => {
            let mut result = false;
            for i in 0..=*k as usize {
                if holds(m, r, paths, j + i)? {
                    result = true;
                    break;
                }
                if !holds(m, l, paths, j + i)? {
                    break;
                }
            }
            result
        }
        F::Ev(k, c) => {
            let mut any = false;
            for i in 0..=*k as usize {
                any |= holds(m, c, paths, j + i)?;
            }
            any
        }
        F::Glob(k, c) => {
            let mut all = true;
            for i in 0..=*k as usize {
                all &= holds(m, c, paths, j + i)?;
            }
            all
        }
        F::Prob { region, args } => {
            let probs = prob_vector(m, args, paths, j)?;
            let mut inside = true;
            for (&(lo, hi), &p) in region.iter().zip(&probs) {
                for face in [lo, hi] {
                    if (p - face).abs() < NEAR {
                        return Err(NearBoundary);
                    }
                }
                inside &= lo <= p && p <= hi;
            }
            inside
        }
    })
}

/// Probabilities of each Prob argument at position `j`: tuple variables get
/// every fresh path from their current state, the others keep their suffix.
pub fn prob_vector(
    m: &TModel,
    args: &[(Vec<usize>, F)],
    paths: &[Vec<usize>],
    j: usize,
) -> Result<Vec<f64>, NearBoundary> {
    let mut out = Vec::with_capacity(args.len());
    for (tuple, body) in args {
        let steps = body.horizon();
        let base: Vec<Vec<usize>> = paths
            .iter()
            .map(|p| p.get(j..).map(<[usize]>::to_vec).unwrap_or_default())
            .collect();
        let choices: Vec<Vec<(Vec<usize>, f64)>> = tuple
            .iter()
            .map(|&v| m.paths_from(base[v][0], steps))
            .collect();
        let mut total = 0.0;
        let mut idx = vec![0usize; tuple.len()];
        loop {
            let mut local = base.clone();
            let mut weight = 1.0;
            for (t, &v) in tuple.iter().enumerate() {
                let (p, w) = &choices[t][idx[t]];
                local[v] = p.clone();
                weight *= w;
            }
            if holds(m, body, &local, 0)? {
                total += weight;
            }
            // Odometer over the joint choices.
            let mut t = 0;
            loop {
                if t == tuple.len() {
                    out.push(total);
                    break;
                }
                idx[t] += 1;
                if idx[t] < choices[t].len() {
                    break;
                }
                idx[t] = 0;
                t += 1;
            }
            if t == tuple.len() {
                break;
            }
        }
    }
    Ok(out)
}

/// Binds each variable of `formula` present in `paths` (by index into
/// [`VARS`]).
pub fn bind(formula: &HyperFormula, model: &Dtmc, paths: &[Vec<usize>]) -> PathAssignment {
    let mut v = PathAssignment::new(formula);
    for (i, p) in paths.iter().enumerate() {
        if let Some(var) = formula.var_id(VARS[i]) {
            v.bind(var, &FinitePath::new(model, p.clone()).expect("valid path"));
        }
    }
    v
}

/// Random positive-probability path with `steps` transitions.
pub fn random_path<R: Rng>(rng: &mut R, m: &TModel, start: usize, steps: usize) -> Vec<usize> {
    let mut p = vec![start];
    for _ in 0..steps {
        let last = *p.last().unwrap();
        let row = &m.trans[last];
        p.push(row[rng.gen_range(0..row.len())].0);
    }
    p
}

// ---------------------------------------------------------------------------
// Quadrature

/// ∫_lo^hi f by tanh-sinh quadrature; accurate to near machine precision
/// for integrands with algebraic endpoint behaviour.
pub fn tanh_sinh<Fn1: Fn(f64) -> f64>(f: Fn1, lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    let half = 0.5 * (hi - lo);
    let h = 1.0 / 64.0;
    let mut sum = 0.0;
    let mut k: i64 = -(6.0 / h) as i64;
    while (k as f64) * h <= 6.0 {
        let t = k as f64 * h;
        let u = std::f64::consts::FRAC_PI_2 * t.sinh();
        let ch = u.cosh();
        let w = std::f64::consts::FRAC_PI_2 * t.cosh() / (ch * ch);
        let x = u.tanh();
        // Distance to the nearer endpoint, computed without cancellation.
        let d = half / (u.abs().exp() * ch);
        let point = if x < 0.0 { lo + d } else { hi - d };
        if point > lo && point < hi && w > 0.0 {
            sum += w * f(point);
        }
        k += 1;
    }
    sum * h * half
}

/// Unnormalized posterior density exponents are `a+m−1` and `b+n−m−1`.
pub fn beta_kernel(a: f64, b: f64) -> impl Fn(f64) -> f64 {
    move |x: f64| ((a - 1.0) * x.ln() + (b - 1.0) * (1.0 - x).ln()).exp()
}

/// Bayes factor of a box region by direct quadrature: the posterior-weight
/// ratio of D and its complement divided by the same ratio under the prior.
pub fn quadrature_bayes_factor(
    a: f64,
    b: f64,
    successes: &[u64],
    n: u64,
    region: &[(f64, f64)],
) -> f64 {
    let ratio = |params: &[(f64, f64)]| {
        // Per-dimension integrals inside, below and above the interval.
        let parts: Vec<(f64, f64)> = params
            .iter()
            .zip(region)
            .map(|(&(pa, pb), &(lo, hi))| {
                let k = beta_kernel(pa, pb);
                let inside = tanh_sinh(&k, lo, hi);
                let outside = tanh_sinh(&k, 0.0, lo) + tanh_sinh(&k, hi, 1.0);
                (inside, outside)
            })
            .collect();
        let in_d: f64 = parts.iter().map(|p| p.0).product();
        // Dᶜ as the disjoint union over the first coordinate leaving D.
        let mut out_d = 0.0;
        for i in 0..parts.len() {
            let mut term = parts[i].1;
            for (j, p) in parts.iter().enumerate() {
                if j < i {
                    term *= p.0;
                } else if j > i {
                    term *= p.0 + p.1;
                }
            }
            out_d += term;
        }
        in_d / out_d
    };
    let post: Vec<(f64, f64)> = successes
        .iter()
        .map(|&m| (a + m as f64, b + (n - m) as f64))
        .collect();
    let prior: Vec<(f64, f64)> = successes.iter().map(|_| (a, b)).collect();
    ratio(&post) / ratio(&prior)
}

/// P(Bin(n, 1/2) ≤ k) as an exact fraction over 2ⁿ.
pub fn binomial_half_cdf(n: u64, k: u64) -> (u128, u128) {
    let mut c: u128 = 1;
    let mut sum: u128 = 0;
    for i in 0..=n {
        if i <= k {
            sum += c;
        }
        c = c * (n - i) as u128 / (i + 1) as u128;
    }
    (sum, 1u128 << n)
}
pub mod props;
