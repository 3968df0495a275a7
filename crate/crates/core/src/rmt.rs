//! Week-by-week correlation matrices of a single return series, their
//! eigenvalue spectra against the Marchenko–Pastur law, and eigensignals.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{WeekInstant, WeekSegmentation};
use crate::model::ReturnSeries;
use crate::returns::standardize;
use crate::stats::mean_std;

/// Eigenvalues below this are reported as exactly zero.
pub const EIGENVALUE_FLOOR: f64 = 1e-10;

/// Default outlier threshold for eigensignals, in standard deviations.
pub const DEFAULT_OUTLIER_THRESHOLD: f64 = 10.0;

/// K × T_K matrix whose rows are the individually normalized weekly
/// segments.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentMatrix {
    pub m: DMatrix<f64>,
    /// Epoch second of every row's first sample, when known.
    pub row_starts: Vec<i64>,
    pub step: i64,
}

impl SegmentMatrix {
    /// Builds a matrix from raw rows of equal length, normalizing each.
    pub fn from_rows(rows: &[Vec<f64>], step: i64) -> Result<Self> {
        let t = rows.first().map(Vec::len).unwrap_or(0);
        if rows.is_empty() || t < 2 {
            return Err(Error::usage("segment matrix needs at least one row of two or more samples"));
        }
        if rows.iter().any(|r| r.len() != t) {
            return Err(Error::usage("segment rows differ in length"));
        }
        Self::build(rows, step).map_err(|i| Error::degenerate(format!("segment {i} has zero variance")))
    }

    fn build(rows: &[Vec<f64>], step: i64) -> std::result::Result<Self, usize> {
        let t = rows[0].len();
        let normalized: Vec<Vec<f64>> =
            rows.par_iter().enumerate().map(|(i, r)| standardize(r).map(|(v, _, _)| v).ok_or(i)).collect::<std::result::Result<_, _>>()?;
        let m = DMatrix::from_fn(rows.len(), t, |i, j| normalized[i][j]);
        Ok(Self { m, row_starts: Vec::new(), step })
    }

    pub fn k(&self) -> usize {
        self.m.nrows()
    }

    pub fn t_k(&self) -> usize {
        self.m.ncols()
    }

    /// `Q = T_K / K`.
    pub fn q(&self) -> f64 {
        self.t_k() as f64 / self.k() as f64
    }
}

/// One row per complete week of `series`.
pub fn build_segment_matrix(series: &ReturnSeries, seg: &WeekSegmentation) -> Result<SegmentMatrix> {
    if seg.ranges.is_empty() {
        return Err(Error::usage("segmentation contains no complete week"));
    }
    let n = series.values.len();
    if let Some(&(a, b)) = seg.ranges.iter().find(|&&(_, b)| b > n) {
        return Err(Error::usage(format!("week range [{a}, {b}) lies outside the {n}-sample series")));
    }
    let rows: Vec<Vec<f64>> = seg.ranges.iter().map(|&(a, b)| series.values[a..b].to_vec()).collect();
    let mut m = SegmentMatrix::build(&rows, series.grid.step()).map_err(|i| {
        Error::degenerate(format!("segment {i} (week starting at epoch {}) has zero variance", seg.week_starts[i]))
    })?;
    m.row_starts = seg.ranges.iter().map(|&(a, _)| series.grid.timestamp(a)).collect();
    Ok(m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    /// Equal-width bins spanning the data range.
    pub fn of(values: &[f64], bins: usize) -> Self {
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, lo + 0.5) };
        let w = (hi - lo) / bins as f64;
        let edges = (0..=bins).map(|i| lo + w * i as f64).collect();
        let mut counts = vec![0; bins];
        for &v in values {
            let i = (((v - lo) / w) as usize).min(bins - 1);
            counts[i] += 1;
        }
        Self { edges, counts }
    }
}

/// Distribution of the off-diagonal correlation coefficients, with the
/// moments of the best-fitting Gaussian.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElementSummary {
    pub count: usize,
    pub mean: f64,
    pub std: f64,
    pub histogram: Histogram,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    pub c: DMatrix<f64>,
    pub elements: ElementSummary,
}

/// `C = (1/T_K) M Mᵀ`.
pub fn correlation_matrix(m: &SegmentMatrix) -> CorrelationMatrix {
    let k = m.k();
    let mut c = (&m.m * m.m.transpose()) / m.t_k() as f64;
    for i in 0..k {
        for j in 0..i {
            let v = 0.5 * (c[(i, j)] + c[(j, i)]);
            c[(i, j)] = v;
            c[(j, i)] = v;
        }
    }
    let off: Vec<f64> = (0..k).flat_map(|i| (0..i).map(move |j| (i, j))).map(|(i, j)| c[(i, j)]).collect();
    let elements = if off.is_empty() {
        ElementSummary { count: 0, mean: 0.0, std: 0.0, histogram: Histogram { edges: vec![], counts: vec![] } }
    } else {
        let (mean, std) = mean_std(&off);
        ElementSummary { count: off.len(), mean, std, histogram: Histogram::of(&off, 50) }
    };
    CorrelationMatrix { c, elements }
}

/// Eigenvalues in descending order; column k of `eigenvectors` belongs to
/// `eigenvalues[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<f64>,
}

/// Symmetric eigendecomposition with a deterministic sign: the component of
/// largest magnitude of every eigenvector is positive.
pub fn diagonalize(c: &DMatrix<f64>) -> Result<EigenDecomposition> {
    let k = c.nrows();
    if k == 0 || c.ncols() != k {
        return Err(Error::usage(format!("expected a non-empty square matrix, got {}x{}", c.nrows(), c.ncols())));
    }
    let scale = c.amax().max(1.0);
    for i in 0..k {
        for j in 0..i {
            if (c[(i, j)] - c[(j, i)]).abs() > 1e-12 * scale {
                return Err(Error::usage(format!("matrix is not symmetric at ({i}, {j})")));
            }
        }
    }
    let eig = nalgebra::SymmetricEigen::new(c.clone());
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let eigenvalues = order
        .iter()
        .map(|&i| {
            let l = eig.eigenvalues[i];
            if l < EIGENVALUE_FLOOR {
                0.0
            } else {
                l
            }
        })
        .collect();
    let mut eigenvectors = DMatrix::zeros(k, k);
    for (col, &i) in order.iter().enumerate() {
        let v = eig.eigenvectors.column(i);
        let pivot = v.iter().enumerate().fold(0, |best, (j, x)| if x.abs() > v[best].abs() { j } else { best });
        let sign = if v[pivot] < 0.0 { -1.0 } else { 1.0 };
        eigenvectors.set_column(col, &(v * sign));
    }
    Ok(EigenDecomposition { eigenvalues, eigenvectors })
}

/// `(λ_min, λ_max) = σ² (1 + 1/Q ∓ 2 √(1/Q))`.
pub fn mp_bounds(q: f64, sigma2: f64) -> (f64, f64) {
    let r = 1.0 / q;
    (sigma2 * (1.0 + r - 2.0 * r.sqrt()), sigma2 * (1.0 + r + 2.0 * r.sqrt()))
}

/// Marchenko–Pastur eigenvalue density for a correlation matrix of
/// independent rows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MpDensity {
    pub sigma2: f64,
    pub q: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
}

impl MpDensity {
    pub fn new(q: f64, sigma2: f64) -> Result<Self> {
        if !(q >= 1.0) {
            return Err(Error::usage(format!("Marchenko-Pastur comparison needs Q >= 1, got {q}")));
        }
        Self::lenient(q, sigma2)
    }

    /// Accepts Q < 1. The continuous part then carries only mass Q, the
    /// rest sits in a point mass at zero that [`MpDensity::density`] does
    /// not represent.
    pub fn lenient(q: f64, sigma2: f64) -> Result<Self> {
        if !(q > 0.0 && q.is_finite() && sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::usage(format!("invalid Marchenko-Pastur parameters Q = {q}, sigma2 = {sigma2}")));
        }
        let (lambda_min, lambda_max) = mp_bounds(q, sigma2);
        Ok(Self { sigma2, q, lambda_min, lambda_max })
    }

    /// `ρ(λ) = Q/(2πσ²) · √((λ_max − λ)(λ − λ_min)) / λ`, zero outside the
    /// support.
    pub fn density(&self, lambda: f64) -> f64 {
        if lambda <= self.lambda_min || lambda >= self.lambda_max || lambda <= 0.0 {
            return 0.0;
        }
        self.q / (2.0 * std::f64::consts::PI * self.sigma2) * ((self.lambda_max - lambda) * (lambda - self.lambda_min)).sqrt()
            / lambda
    }

    /// Fraction of `eigenvalues` outside `[λ_min, λ_max]`.
    pub fn fraction_outside(&self, eigenvalues: &[f64]) -> f64 {
        let out = eigenvalues.iter().filter(|&&l| l < self.lambda_min || l > self.lambda_max).count();
        out as f64 / eigenvalues.len() as f64
    }
}

/// Projection of the segments on one eigenvector, `z_k(t_i) = Σ_β v_β^k g_β(t_i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Eigensignal {
    /// Mode number, 1 for the largest eigenvalue.
    pub k: usize,
    pub z: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Outlier {
    /// Offset within the week, in grid steps.
    pub index: usize,
    pub value: f64,
    /// |value| in units of the eigensignal's standard deviation.
    pub multiple: f64,
    pub time_of_week: Option<WeekInstant>,
}

/// Eigensignal of mode `k` (1-based, 1 = largest eigenvalue).
pub fn eigensignal(m: &SegmentMatrix, dec: &EigenDecomposition, k: usize) -> Result<Eigensignal> {
    let n = dec.eigenvalues.len();
    if k == 0 || k > n || n != m.k() {
        return Err(Error::usage(format!("mode {k} out of range 1..={}", n.min(m.k()))));
    }
    let v = dec.eigenvectors.column(k - 1);
    let z = (v.transpose() * &m.m).iter().copied().collect();
    Ok(Eigensignal { k, z })
}

impl Eigensignal {
    /// Samples whose magnitude exceeds `threshold` standard deviations,
    /// largest first.
    pub fn outliers(&self, threshold: f64, m: &SegmentMatrix) -> Vec<Outlier> {
        let (_, sd) = mean_std(&self.z);
        if !(sd > 0.0) {
            return Vec::new();
        }
        let mut out: Vec<Outlier> = self
            .z
            .iter()
            .enumerate()
            .filter(|(_, v)| v.abs() > threshold * sd)
            .map(|(index, &value)| Outlier {
                index,
                value,
                multiple: value.abs() / sd,
                time_of_week: m.row_starts.first().map(|&t0| WeekInstant::of_epoch(t0 + index as i64 * m.step)),
            })
            .collect();
        out.sort_by(|a, b| b.multiple.total_cmp(&a.multiple).then(a.index.cmp(&b.index)));
        out
    }

    /// Index of the sample with the largest |z|.
    pub fn argmax_abs(&self) -> usize {
        self.z.iter().enumerate().fold(0, |best, (i, v)| if v.abs() > self.z[best].abs() { i } else { best })
    }
}
