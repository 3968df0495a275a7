//! Multifractal detrended fluctuation analysis.
//!
//! The profile of the mean-removed signal is cut into non-overlapping
//! segments of n samples, starting once from the beginning and once from
//! the end, so every scale uses 2·M_n segments with M_n = ⌊T/n⌋. Each
//! segment is detrended with a least-squares polynomial and the residual
//! variances are combined into the order-r fluctuation function
//! `F_r(n) = { (1/2M_n) Σ_ν [F²(ν, n)]^(r/2) }^(1/r)`, with the logarithmic
//! average at r = 0. Generalized Hurst exponents come from log-log slopes
//! of F_r(n); τ(r), α and f(α) follow.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{fit_line, log_spaced, mean};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MfdfaConfig {
    pub r_values: Vec<f64>,
    pub n_min: usize,
    pub n_max: usize,
    pub n_count: usize,
    pub poly_order: usize,
    /// Inclusive range of scales used in the h(r) regression.
    pub scaling_window: (usize, usize),
}

/// `[-4, 4]` in steps of 0.4.
pub fn default_r_values() -> Vec<f64> {
    (-10..=10).map(|i| (4 * i) as f64 / 10.0).collect()
}

impl MfdfaConfig {
    /// Defaults for a series of `count` samples: scales from 16 to count/4,
    /// regression over [16, count/50], second-order detrending.
    pub fn for_length(count: usize) -> Self {
        Self {
            r_values: default_r_values(),
            n_min: 16,
            n_max: count / 4,
            n_count: 40,
            poly_order: 2,
            scaling_window: (16, count / 50),
        }
    }

    pub fn validate(&self, count: usize) -> Result<()> {
        if self.n_min < self.poly_order + 2 {
            return Err(Error::usage(format!(
                "n_min = {} must be at least poly_order + 2 = {}",
                self.n_min,
                self.poly_order + 2
            )));
        }
        if self.n_max > count / 4 || self.n_max <= self.n_min {
            return Err(Error::usage(format!(
                "scale range [{}, {}] must satisfy n_min < n_max <= count/4 = {}",
                self.n_min,
                self.n_max,
                count / 4
            )));
        }
        if self.n_count < 2 {
            return Err(Error::usage("n_count must be at least 2"));
        }
        if !self.r_values.iter().any(|&r| r < 0.0) || !self.r_values.iter().any(|&r| r > 0.0) {
            return Err(Error::usage("the r grid must contain both negative and positive values"));
        }
        if self.r_values.iter().any(|r| !r.is_finite()) || self.r_values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::usage("r values must be finite and strictly increasing"));
        }
        let (lo, hi) = self.scaling_window;
        if lo >= hi || lo < self.n_min || hi > self.n_max {
            return Err(Error::usage(format!(
                "scaling window [{lo}, {hi}] must lie inside the scale range [{}, {}]",
                self.n_min, self.n_max
            )));
        }
        Ok(())
    }

    pub fn scales(&self) -> Vec<usize> {
        log_spaced(self.n_min, self.n_max, self.n_count)
    }
}

/// `Y(j) = Σ_{i ≤ j} (x_i − ⟨x⟩)`.
pub fn profile(x: &[f64]) -> Result<Vec<f64>> {
    if x.len() < 2 {
        return Err(Error::usage("profile needs at least two samples"));
    }
    let m = mean(x);
    let mut acc = 0.0;
    Ok(x.iter()
        .map(|v| {
            acc += v - m;
            acc
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluctuationSurface {
    pub scales: Vec<usize>,
    pub r_values: Vec<f64>,
    /// `f[i][j] = F_{r_i}(n_j)`.
    pub f: Vec<Vec<f64>>,
    /// 2·M_n for every scale.
    pub segments_used: Vec<usize>,
    /// Whether F_r(n) is nondecreasing in r at every scale, as the
    /// power-mean inequality requires.
    pub monotone_in_r: bool,
}

/// Orthonormal basis of polynomials of degree ≤ order sampled on n points.
fn polynomial_basis(n: usize, order: usize) -> Vec<Vec<f64>> {
    let half = (n as f64 - 1.0) / 2.0;
    let x: Vec<f64> = (0..n).map(|j| (j as f64 - half) / half).collect();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(order + 1);
    for d in 0..=order {
        let mut v: Vec<f64> = x.iter().map(|t| t.powi(d as i32)).collect();
        // two passes of modified Gram–Schmidt
        for _ in 0..2 {
            for q in &basis {
                let c: f64 = q.iter().zip(&v).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(q).for_each(|(a, b)| *a -= c * b);
            }
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        v.iter_mut().for_each(|a| *a /= norm);
        basis.push(v);
    }
    basis
}

/// Residual variance of `y` after removing its projection on `basis`.
fn detrended_variance(y: &[f64], basis: &[Vec<f64>], work: &mut Vec<f64>) -> f64 {
    work.clear();
    work.extend_from_slice(y);
    for q in basis {
        let c: f64 = q.iter().zip(work.iter()).map(|(a, b)| a * b).sum();
        work.iter_mut().zip(q).for_each(|(a, b)| *a -= c * b);
    }
    work.iter().map(|a| a * a).sum::<f64>() / y.len() as f64
}

/// Per-segment variances F²(ν, n) for one scale: forward segments first,
/// then the ones counted from the end.
pub fn segment_variances(y: &[f64], n: usize, order: usize) -> Result<Vec<f64>> {
    let t = y.len();
    let m = t / n;
    let basis = polynomial_basis(n, order);
    let mut work = Vec::with_capacity(n);
    let mut out = Vec::with_capacity(2 * m);
    for pass in 0..2 {
        for nu in 0..m {
            let start = if pass == 0 { nu * n } else { t - (nu + 1) * n };
            let seg = &y[start..start + n];
            let v = detrended_variance(seg, &basis, &mut work);
            let scale = seg.iter().fold(0.0f64, |a, b| a.max(b.abs()));
            if v <= (1e-13 * scale).powi(2) {
                let dir = if pass == 0 { "forward" } else { "backward" };
                return Err(Error::degenerate(format!(
                    "segment {nu} ({dir}, samples {start}..{}) at scale {n} has zero residual variance",
                    start + n
                )));
            }
            out.push(v);
        }
    }
    Ok(out)
}

/// `F_r` from the segment variances, evaluated in log space.
pub fn fluctuation_from_variances(var: &[f64], r: f64) -> f64 {
    let logs: Vec<f64> = var.iter().map(|v| v.ln()).collect();
    let k = logs.len() as f64;
    if r == 0.0 {
        return (0.5 * logs.iter().sum::<f64>() / k).exp();
    }
    let e: Vec<f64> = logs.iter().map(|l| 0.5 * r * l).collect();
    let top = e.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = top + e.iter().map(|v| (v - top).exp()).sum::<f64>().ln();
    ((lse - k.ln()) / r).exp()
}

pub fn fluctuation_surface(x: &[f64], config: &MfdfaConfig) -> Result<FluctuationSurface> {
    config.validate(x.len())?;
    let y = profile(x)?;
    let scales = config.scales();
    let per_scale: Vec<(Vec<f64>, usize)> = scales
        .par_iter()
        .map(|&n| {
            let var = segment_variances(&y, n, config.poly_order)?;
            let f = config.r_values.iter().map(|&r| fluctuation_from_variances(&var, r)).collect();
            Ok((f, var.len()))
        })
        .collect::<Result<_>>()?;
    let f: Vec<Vec<f64>> =
        (0..config.r_values.len()).map(|i| per_scale.iter().map(|(fs, _)| fs[i]).collect()).collect();
    let monotone_in_r = (0..scales.len()).all(|j| f.windows(2).all(|w| w[1][j] >= w[0][j] * (1.0 - 1e-12)));
    Ok(FluctuationSurface {
        scales,
        r_values: config.r_values.clone(),
        f,
        segments_used: per_scale.iter().map(|(_, m)| *m).collect(),
        monotone_in_r,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HurstExponents {
    pub r_values: Vec<f64>,
    pub h: Vec<f64>,
    pub h_stderr: Vec<f64>,
    pub scaling_window: (usize, usize),
    pub scales_used: usize,
}

/// Slopes of ln F_r(n) against ln n over the scales inside `window`.
pub fn generalized_hurst(surface: &FluctuationSurface, window: (usize, usize)) -> Result<HurstExponents> {
    let idx: Vec<usize> =
        (0..surface.scales.len()).filter(|&j| surface.scales[j] >= window.0 && surface.scales[j] <= window.1).collect();
    if idx.len() < 5 {
        return Err(Error::usage(format!(
            "scaling window [{}, {}] contains {} scales, need at least 5",
            window.0,
            window.1,
            idx.len()
        )));
    }
    let lx: Vec<f64> = idx.iter().map(|&j| (surface.scales[j] as f64).ln()).collect();
    let (h, h_stderr) = surface
        .f
        .iter()
        .map(|row| {
            let ly: Vec<f64> = idx.iter().map(|&j| row[j].ln()).collect();
            let l = fit_line(&lx, &ly);
            (l.slope, l.slope_stderr)
        })
        .unzip();
    Ok(HurstExponents { r_values: surface.r_values.clone(), h, h_stderr, scaling_window: window, scales_used: idx.len() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultifractalResult {
    pub r_values: Vec<f64>,
    pub h: Vec<f64>,
    pub tau: Vec<f64>,
    pub alpha: Vec<f64>,
    pub f_alpha: Vec<f64>,
    pub width: f64,
    /// α at the maximum of f(α).
    pub peak_alpha: f64,
    pub min_alpha: f64,
    pub min_f: f64,
    pub max_f: f64,
    pub tau_nondecreasing: bool,
    pub tau_concave: bool,
}

impl MultifractalResult {
    /// Whether the spectrum left the conventional regime (negative α or
    /// f, or a non-concave / decreasing τ).
    pub fn is_anomalous(&self) -> bool {
        self.min_alpha < 0.0 || self.min_f < 0.0 || !self.tau_nondecreasing || !self.tau_concave
    }
}

/// τ(r) = r·h(r) − 1, α = dτ/dr by finite differences and
/// f(α) = r(α − h) + 1.
pub fn tau_and_spectrum(r: &[f64], h: &[f64]) -> Result<MultifractalResult> {
    let n = r.len();
    if n < 5 || h.len() != n {
        return Err(Error::usage(format!("spectrum needs at least 5 matching (r, h) points, got {} and {}", n, h.len())));
    }
    let tau: Vec<f64> = r.iter().zip(h).map(|(r, h)| r * h - 1.0).collect();
    let alpha: Vec<f64> = (0..n)
        .map(|i| {
            let (a, b) = if i == 0 {
                (0, 1)
            } else if i == n - 1 {
                (n - 2, n - 1)
            } else {
                (i - 1, i + 1)
            };
            (tau[b] - tau[a]) / (r[b] - r[a])
        })
        .collect();
    let f_alpha: Vec<f64> = (0..n).map(|i| r[i] * (alpha[i] - h[i]) + 1.0).collect();
    let min_alpha = alpha.iter().copied().fold(f64::INFINITY, f64::min);
    let max_alpha = alpha.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let peak = (0..n).fold(0, |b, i| if f_alpha[i] > f_alpha[b] { i } else { b });
    let tol = 1e-12;
    let tau_nondecreasing = tau.windows(2).all(|w| w[1] >= w[0] - tol);
    let slopes: Vec<f64> = (1..n).map(|i| (tau[i] - tau[i - 1]) / (r[i] - r[i - 1])).collect();
    let tau_concave = slopes.windows(2).all(|w| w[1] <= w[0] + tol);
    Ok(MultifractalResult {
        r_values: r.to_vec(),
        h: h.to_vec(),
        tau,
        width: max_alpha - min_alpha,
        peak_alpha: alpha[peak],
        min_alpha,
        min_f: f_alpha.iter().copied().fold(f64::INFINITY, f64::min),
        max_f: f_alpha[peak],
        alpha,
        f_alpha,
        tau_nondecreasing,
        tau_concave,
    })
}

/// Full analysis: surface, h(r) over the configured window and spectrum.
pub fn analyze(x: &[f64], config: &MfdfaConfig) -> Result<(FluctuationSurface, HurstExponents, MultifractalResult)> {
    let surface = fluctuation_surface(x, config)?;
    let h = generalized_hurst(&surface, config.scaling_window)?;
    let spec = tau_and_spectrum(&h.r_values, &h.h)?;
    Ok((surface, h, spec))
}

/// Uniformly random permutation of `x`, reproducible from `seed`.
pub fn shuffle_surrogate(x: &[f64], seed: u64) -> Vec<f64> {
    let mut out = x.to_vec();
    out.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    out
}
