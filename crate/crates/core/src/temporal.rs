//! Autocorrelation functions and power-law fits of their decay.

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ReturnSeries;
use crate::returns::standardize;
use crate::stats::fit_line;

/// Below this many multiply-adds the direct lag loop is used.
const DIRECT_WORK_LIMIT: usize = 20_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutocorrResult {
    pub lags: Vec<usize>,
    pub c: Vec<f64>,
    pub n_eff: Vec<usize>,
    /// Half-width of the 95% white-noise band, `1.96 / √n_eff`.
    pub confidence_95: Vec<f64>,
}

impl AutocorrResult {
    /// Fraction of lags in `[1, max_lag]` whose |c| lies inside the band.
    pub fn fraction_inside_band(&self) -> f64 {
        let inside = self.c.iter().zip(&self.confidence_95).skip(1).filter(|(c, b)| c.abs() <= **b).count();
        inside as f64 / (self.c.len() - 1).max(1) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    /// Decay exponent γ in `c(τ) ≈ A τ^(−γ)`, i.e. minus the log-log slope.
    pub exponent: f64,
    pub amplitude: f64,
    pub fit_window: (usize, usize),
    pub r_squared: f64,
    pub exponent_stderr: f64,
}

/// `c(τ) = ⟨f(t+τ) f(t)⟩` for τ = 0..=max_lag, with f the series after mean
/// removal and scaling to unit variance.
pub fn autocorrelation(series: &ReturnSeries, max_lag: usize) -> Result<AutocorrResult> {
    autocorrelation_of(&series.values, max_lag)
}

/// [`autocorrelation`] on a bare slice.
pub fn autocorrelation_of(x: &[f64], max_lag: usize) -> Result<AutocorrResult> {
    let n = x.len();
    if max_lag == 0 || max_lag.saturating_mul(10) >= n {
        return Err(Error::usage(format!("max_lag must satisfy 1 <= max_lag < count/10, got {max_lag} for count {n}")));
    }
    let (f, _, _) = standardize(x).ok_or_else(|| Error::degenerate("autocorrelation of a constant series"))?;
    let sums =
        if n.saturating_mul(max_lag + 1) <= DIRECT_WORK_LIMIT { lag_sums_direct(&f, max_lag) } else { lag_sums_fft(&f, max_lag) };
    let lags: Vec<usize> = (0..=max_lag).collect();
    let n_eff: Vec<usize> = lags.iter().map(|&t| n - t).collect();
    let c: Vec<f64> = sums.iter().zip(&n_eff).map(|(s, &m)| s / m as f64).collect();
    let confidence_95 = n_eff.iter().map(|&m| 1.96 / (m as f64).sqrt()).collect();
    Ok(AutocorrResult { lags, c, n_eff, confidence_95 })
}

fn lag_sums_direct(f: &[f64], max_lag: usize) -> Vec<f64> {
    (0..=max_lag).into_par_iter().map(|t| f[t..].iter().zip(f).map(|(a, b)| a * b).sum()).collect()
}

fn lag_sums_fft(f: &[f64], max_lag: usize) -> Vec<f64> {
    let len = (f.len() + max_lag + 1).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(len);
    let inv = planner.plan_fft_inverse(len);
    let mut buf: Vec<Complex<f64>> = f.iter().map(|&v| Complex::new(v, 0.0)).collect();
    buf.resize(len, Complex::new(0.0, 0.0));
    fwd.process(&mut buf);
    for z in &mut buf {
        *z = Complex::new(z.norm_sqr(), 0.0);
    }
    inv.process(&mut buf);
    buf[..=max_lag].iter().map(|z| z.re / len as f64).collect()
}

/// Least-squares line through `(ln τ, ln c(τ))` for all lags in the
/// inclusive window.
pub fn fit_power_law(ac: &AutocorrResult, window: (usize, usize)) -> Result<PowerLawFit> {
    let (lo, hi) = window;
    let last = *ac.lags.last().unwrap_or(&0);
    if lo == 0 || hi <= lo || hi > last {
        return Err(Error::usage(format!("power-law window [{lo}, {hi}] must satisfy 1 <= lo < hi <= {last}")));
    }
    let mut lx = Vec::with_capacity(hi - lo + 1);
    let mut ly = Vec::with_capacity(hi - lo + 1);
    for (&tau, &c) in ac.lags.iter().zip(&ac.c) {
        if tau < lo || tau > hi {
            continue;
        }
        if !(c > 0.0) {
            return Err(Error::domain(format!("autocorrelation is not positive at lag {tau} (c = {c})")));
        }
        lx.push((tau as f64).ln());
        ly.push(c.ln());
    }
    let line = fit_line(&lx, &ly);
    Ok(PowerLawFit {
        exponent: -line.slope,
        amplitude: line.intercept.exp(),
        fit_window: window,
        r_squared: line.r_squared.clamp(0.0, 1.0),
        exponent_stderr: line.slope_stderr,
    })
}
