//! Beta priors and the regularized incomplete beta function.

use super::StatsError;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// ln Γ(x) for x > 0 (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

const CF_MAX_ITER: usize = 10_000;
const CF_EPS: f64 = 1e-15;
const CF_TINY: f64 = 1e-300;

/// Regularized incomplete beta I_x(a, b), continued fraction with the
/// symmetry switch at x > (a+1)/(a+b+2).
pub fn reg_inc_beta(a: f64, b: f64, x: f64) -> f64 {
    debug_assert!(a > 0.0 && b > 0.0);
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    if x > (a + 1.0) / (a + b + 2.0) {
        1.0 - inc_beta_cf(b, a, 1.0 - x)
    } else {
        inc_beta_cf(a, b, x)
    }
}

/// Modified Lentz evaluation; only accurate below the switch point.
fn inc_beta_cf(a: f64, b: f64, x: f64) -> f64 {
    let ln_front = a * x.ln() + b * (1.0 - x).ln() - ln_beta(a, b);
    let front = ln_front.exp() / a;
    if front == 0.0 {
        return 0.0;
    }

    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < CF_TINY {
        d = CF_TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        h *= d * c;

        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < CF_TINY {
            d = CF_TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < CF_TINY {
            c = CF_TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < CF_EPS {
            break;
        }
    }
    front * h
}

/// Beta(a, b) prior on each Bernoulli parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaPrior {
    a: f64,
    b: f64,
}

impl BetaPrior {
    pub fn new(a: f64, b: f64) -> Result<Self, StatsError> {
        if !(a.is_finite() && b.is_finite() && a > 0.0 && b > 0.0) {
            return Err(StatsError::InvalidPrior { a, b });
        }
        Ok(Self { a, b })
    }

    pub fn uniform() -> Self {
        Self { a: 1.0, b: 1.0 }
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// Conjugate update after `successes` out of `trials`.
    pub fn posterior(&self, successes: u64, trials: u64) -> Self {
        debug_assert!(successes <= trials);
        Self {
            a: self.a + successes as f64,
            b: self.b + (trials - successes) as f64,
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if !(0.0..=1.0).contains(&x) {
            return 0.0;
        }
        let ln =
            (self.a - 1.0) * x.ln() + (self.b - 1.0) * (1.0 - x).ln() - ln_beta(self.a, self.b);
        ln.exp()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        reg_inc_beta(self.a, self.b, x.clamp(0.0, 1.0))
    }

    /// Upper tail P(Θ > x), computed without cancellation.
    pub fn sf(&self, x: f64) -> f64 {
        reg_inc_beta(self.b, self.a, (1.0 - x).clamp(0.0, 1.0))
    }

    /// Returns `(mass, complement)` of `[lo, hi]`, each computed directly so
    /// that neither loses precision when the other is close to 1.
    pub fn interval_mass(&self, lo: f64, hi: f64) -> (f64, f64) {
        if lo <= 0.0 && hi >= 1.0 {
            return (1.0, 0.0);
        }
        let below = if lo <= 0.0 { 0.0 } else { self.cdf(lo) };
        let above = if hi >= 1.0 { 0.0 } else { self.sf(hi) };
        let complement = (below + above).min(1.0);
        let mass = if below <= 0.5 {
            // lower-tail difference
            (if hi >= 1.0 { 1.0 } else { self.cdf(hi) } - below).max(0.0)
        } else {
            (if lo <= 0.0 { 1.0 } else { self.sf(lo) } - above).max(0.0)
        };
        (mass, complement)
    }
}
