//! Face-wise Wald SPRT for box hypotheses.
//!
//! Each face of D at threshold θ tests Θᵢ = θ ± ε on the containment side
//! against the other side. A face may only accept (reject) while the
//! maximum-likelihood estimate mᵢ/N lies outside the indifference band
//! (θ − ε, θ + ε) on the matching side. Faces lying on the boundary of the
//! unit cube have no alternative inside Ω; they resolve as soon as the
//! estimate leaves their band, which never happens for a parameter sitting
//! exactly on that face. The box accepts when every face accepts and
//! rejects as soon as any face rejects.

use super::{BernoulliCounts, BoxRegion, StatsError, TestDecision};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum FaceDecision {
    Accept,
    Reject,
    Continue,
}

/// Log-likelihood ratio of θ+ε against θ−ε for `m` successes in `n` trials.
pub fn face_llr(theta: f64, eps: f64, m: u64, n: u64) -> f64 {
    let (m, n) = (m as f64, n as f64);
    m * ((theta + eps) / (theta - eps)).ln()
        + (n - m) * ((1.0 - theta - eps) / (1.0 - theta + eps)).ln()
}

fn face_test(
    theta: f64,
    contained_above: bool,
    eps: f64,
    m: u64,
    n: u64,
    accept_at: f64,
    reject_at: f64,
) -> FaceDecision {
    if n == 0 {
        return FaceDecision::Continue;
    }
    let side = if contained_above { 1.0 } else { -1.0 };
    let offset = side * (m as f64 / n as f64 - theta);
    if theta <= 0.0 || theta >= 1.0 {
        return if offset >= eps {
            FaceDecision::Accept
        } else {
            FaceDecision::Continue
        };
    }
    let llr = side * face_llr(theta, eps, m, n);
    if offset >= eps && llr >= accept_at {
        FaceDecision::Accept
    } else if offset <= -eps && llr <= reject_at {
        FaceDecision::Reject
    } else {
        FaceDecision::Continue
    }
}

/// SPRT decision for H0: Θ̄ ∈ D against H1: Θ̄ ∉ D with indifference `eps`.
pub fn sprt_test(
    counts: &BernoulliCounts,
    d: &BoxRegion,
    eps: f64,
    alpha: f64,
    beta: f64,
) -> Result<TestDecision, StatsError> {
    if counts.dimension() != d.dimension() {
        return Err(StatsError::DimensionMismatch {
            counts: counts.dimension(),
            region: d.dimension(),
        });
    }
    if !(eps > 0.0 && eps < 0.5) {
        return Err(StatsError::InvalidIndifference(eps));
    }
    for iv in d.intervals() {
        for face in iv.interior_faces() {
            if !(face - eps > 0.0 && face + eps < 1.0) {
                return Err(StatsError::FaceOutOfRange { face, eps });
            }
        }
    }
    let accept_at = ((1.0 - beta) / alpha).ln();
    let reject_at = (beta / (1.0 - alpha)).ln();
    let n = counts.trials();
    let mut all_accept = true;
    for (iv, &m) in d.intervals().iter().zip(counts.successes()) {
        for (theta, above) in [(iv.lo, true), (iv.hi, false)] {
            match face_test(theta, above, eps, m, n, accept_at, reject_at) {
                FaceDecision::Reject => return Ok(TestDecision::RejectH0),
                FaceDecision::Continue => all_accept = false,
                FaceDecision::Accept => {}
            }
        }
    }
    Ok(if all_accept {
        TestDecision::AcceptH0
    } else {
        TestDecision::Continue
    })
}
