use serde::{Deserialize, Serialize};

use super::Wing;
use crate::error::{Error, Result};
use crate::stats::log_spaced;

/// Sorted sample with rank-based tail probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

/// One empirical point of a wing: `p = P(X ≥ x)` on the right wing and
/// `P(X ≤ x)` on the left.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailPoint {
    pub x: f64,
    pub p: f64,
}

impl EmpiricalCdf {
    pub fn new(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::usage("empirical distribution needs at least one sample"));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::data("empirical distribution received a non-finite sample"));
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(Self { sorted })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn sorted_values(&self) -> &[f64] {
        &self.sorted
    }

    pub fn quantile(&self, u: f64) -> f64 {
        let i = ((self.sorted.len() - 1) as f64 * u.clamp(0.0, 1.0)).round() as usize;
        self.sorted[i]
    }

    /// Point of rank `k` (1 = most extreme) on the given wing, with the
    /// mid-rank probability `(k − ½)/n`.
    pub fn point(&self, wing: Wing, k: usize) -> TailPoint {
        let n = self.sorted.len();
        let x = match wing {
            Wing::Right => self.sorted[n - k],
            Wing::Left => self.sorted[k - 1],
        };
        TailPoint { x, p: (k as f64 - 0.5) / n as f64 }
    }

    /// All ranks whose distance from the origin, measured outward along the
    /// wing, lies in `[lo, hi]`.
    pub fn ranks_in_range(&self, wing: Wing, lo: f64, hi: f64) -> std::ops::RangeInclusive<usize> {
        let n = self.sorted.len();
        // outward coordinate, nondecreasing in rank order reversed
        let outward = |k: usize| match wing {
            Wing::Right => self.sorted[n - k],
            Wing::Left => -self.sorted[k - 1],
        };
        // outward(k) is nonincreasing in k
        let first = partition_point(1, n + 1, |k| outward(k) > hi);
        let end = partition_point(1, n + 1, |k| outward(k) >= lo);
        first..=end.saturating_sub(1)
    }

    /// Up to `max_points` wing points inside `[lo, hi]`, log-spaced in rank
    /// and skipping the `min_rank − 1` most extreme observations.
    pub fn tail_points(&self, wing: Wing, lo: f64, hi: f64, max_points: usize, min_rank: usize) -> Vec<TailPoint> {
        let r = self.ranks_in_range(wing, lo, hi);
        let (a, b) = (*r.start().max(&min_rank.max(1)), *r.end());
        if b < a {
            return Vec::new();
        }
        let ranks: Vec<usize> = if b - a + 1 <= max_points { (a..=b).collect() } else { log_spaced(a, b, max_points) };
        ranks.into_iter().map(|k| self.point(wing, k)).collect()
    }
}

/// First index in `[lo, hi)` where `pred` turns false, assuming it is true
/// on a prefix.
fn partition_point(mut lo: usize, mut hi: usize, pred: impl Fn(usize) -> bool) -> usize {
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if pred(mid) {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    lo
}
