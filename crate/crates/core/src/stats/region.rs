//! Axis-aligned boxes inside the unit cube and their L∞ expansions and
//! reductions relative to Ω = [0,1]^n.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::StatsError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self, StatsError> {
        if !(lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo <= hi && hi <= 1.0) {
            return Err(StatsError::InvalidInterval { lo, hi });
        }
        Ok(Self { lo, hi })
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    /// Faces strictly inside (0, 1); these separate D from its complement.
    pub fn interior_faces(&self) -> impl Iterator<Item = f64> {
        let lo = (self.lo > 0.0).then_some(self.lo);
        let hi = (self.hi < 1.0).then_some(self.hi);
        lo.into_iter().chain(hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// D ⊆ [0,1]^n, a product of closed intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxRegion {
    intervals: Vec<Interval>,
}

impl BoxRegion {
    pub fn new(intervals: Vec<Interval>) -> Result<Self, StatsError> {
        if intervals.is_empty() {
            return Err(StatsError::EmptyRegion);
        }
        Ok(Self { intervals })
    }

    /// Convenience constructor from `(lo, hi)` pairs.
    pub fn from_bounds(bounds: &[(f64, f64)]) -> Result<Self, StatsError> {
        let iv = bounds
            .iter()
            .map(|&(l, h)| Interval::new(l, h))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(iv)
    }

    pub fn dimension(&self) -> usize {
        self.intervals.len()
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn contains(&self, point: &[f64]) -> bool {
        point.len() == self.intervals.len()
            && self
                .intervals
                .iter()
                .zip(point)
                .all(|(iv, &x)| iv.contains(x))
    }

    /// True when the box is all of Ω.
    pub fn is_full(&self) -> bool {
        self.intervals.iter().all(|iv| iv.lo <= 0.0 && iv.hi >= 1.0)
    }

    /// D⁺_ε: every face moves outward by `eps`, clipped to [0,1].
    pub fn expand(&self, eps: f64) -> BoxRegion {
        let intervals = self
            .intervals
            .iter()
            .map(|iv| Interval {
                lo: (iv.lo - eps).max(0.0),
                hi: (iv.hi + eps).min(1.0),
            })
            .collect();
        BoxRegion { intervals }
    }

    /// D⁻_ε = Ω \ (Dᶜ)⁺_ε. Faces on the boundary of Ω stay put; `None` when
    /// some interval inverts.
    pub fn reduce(&self, eps: f64) -> Option<BoxRegion> {
        let mut intervals = Vec::with_capacity(self.intervals.len());
        for iv in &self.intervals {
            let lo = if iv.lo > 0.0 { iv.lo + eps } else { iv.lo };
            let hi = if iv.hi < 1.0 { iv.hi - eps } else { iv.hi };
            if lo > hi {
                return None;
            }
            intervals.push(Interval {
                lo,
                hi: hi.min(1.0),
            });
        }
        Some(BoxRegion { intervals })
    }

    /// L∞ distance from `point` to the boundary of D inside Ω.
    pub fn boundary_distance(&self, point: &[f64]) -> f64 {
        if self.contains(point) {
            self.intervals
                .iter()
                .zip(point)
                .flat_map(|(iv, &x)| iv.interior_faces().map(move |f| (x - f).abs()))
                .fold(f64::INFINITY, f64::min)
        } else {
            self.intervals
                .iter()
                .zip(point)
                .map(|(iv, &x)| {
                    if x < iv.lo {
                        iv.lo - x
                    } else if x > iv.hi {
                        x - iv.hi
                    } else {
                        0.0
                    }
                })
                .fold(0.0, f64::max)
        }
    }

    /// Whether `self ⊆ other`.
    pub fn is_subset_of(&self, other: &BoxRegion) -> bool {
        self.dimension() == other.dimension()
            && self
                .intervals
                .iter()
                .zip(&other.intervals)
                .all(|(a, b)| b.lo <= a.lo && a.hi <= b.hi)
    }
}

impl fmt::Display for BoxRegion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, iv) in self.intervals.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "[{},{}]", iv.lo, iv.hi)?;
        }
        Ok(())
    }
}
