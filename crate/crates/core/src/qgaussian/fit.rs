//! Least-squares fits of q-Gaussian wings to empirical tail probabilities.
//!
//! The objective is the sum of squared differences between the logarithms
//! of the empirical and model wing probabilities. q is scanned on a fixed
//! grid; for every grid value (B_q, μ_q) are refined by Levenberg–Marquardt
//! in (ln B_q, μ_q). The best grid point wins, so the result is fully
//! deterministic.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{cdf_wing, EmpiricalCdf, QGaussianParams, TailPoint, Wing};
use crate::error::{Error, Result};

/// Minimum number of empirical points a wing fit accepts.
pub const MIN_POINTS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Outward distance range `[lo, hi]` from the origin used for the fit.
    pub fit_range: (f64, f64),
    pub q_bounds: (f64, f64),
    pub q_step: f64,
    pub max_points: usize,
    /// Smallest tail rank used; the most extreme order statistics are too
    /// noisy on a log scale to constrain the fit.
    pub min_rank: usize,
    pub max_iterations: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            fit_range: (0.0, f64::INFINITY),
            q_bounds: (1.0, 2.5),
            q_step: 0.01,
            max_points: 200,
            min_rank: 20,
            max_iterations: 200,
        }
    }
}

impl FitOptions {
    /// Central-part fit used for triangle residuals, |g| ≤ 3.
    pub fn residual() -> Self {
        Self { fit_range: (0.0, 3.0), ..Self::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WingFit {
    pub wing: Wing,
    pub params: QGaussianParams,
    pub objective: f64,
    pub n_points: usize,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QGaussianFit {
    pub left: WingFit,
    pub right: WingFit,
    pub fit_range: (f64, f64),
}

/// Fits both wings independently (in parallel).
pub fn fit_both(ecdf: &EmpiricalCdf, options: &FitOptions) -> Result<QGaussianFit> {
    let (left, right) = rayon::join(|| fit(ecdf, Wing::Left, options), || fit(ecdf, Wing::Right, options));
    Ok(QGaussianFit { left: left?, right: right?, fit_range: options.fit_range })
}

/// Fits one wing.
pub fn fit(ecdf: &EmpiricalCdf, wing: Wing, options: &FitOptions) -> Result<WingFit> {
    let (qlo, qhi) = options.q_bounds;
    if !(qlo >= 1.0 && qhi < 3.0 && qlo <= qhi) || !(options.q_step > 0.0) {
        return Err(Error::usage(format!("q bounds must satisfy 1 <= lo <= hi < 3, got [{qlo}, {qhi}]")));
    }
    let (lo, hi) = options.fit_range;
    let points = ecdf.tail_points(wing, lo, hi, options.max_points, options.min_rank);
    if points.len() < MIN_POINTS {
        return Err(Error::usage(format!(
            "{wing} wing has {} empirical points in [{lo}, {hi}], need at least {MIN_POINTS}",
            points.len()
        )));
    }

    let steps = ((qhi - qlo) / options.q_step + 1e-9).floor() as usize;
    let grid: Vec<f64> = (0..=steps).map(|i| qlo + i as f64 * options.q_step).collect();

    let mu0 = ecdf.quantile(0.5);
    let iqr = ecdf.quantile(0.75) - ecdf.quantile(0.25);
    let spread = if iqr > 0.0 { iqr / 1.349 } else { 1.0 };

    let results: Vec<Local> = grid
        .par_iter()
        .map(|&q| {
            let b0 = 1.0 / ((3.0 - q) * spread * spread);
            refine(&points, wing, q, b0.ln(), mu0, options.max_iterations)
        })
        .collect();

    let best = results
        .iter()
        .enumerate()
        .filter(|(_, r)| r.objective.is_finite())
        .min_by(|a, b| a.1.objective.total_cmp(&b.1.objective))
        .map(|(i, _)| i)
        .ok_or_else(|| Error::NonConvergence { iterations: 0, best_objective: f64::INFINITY, best_params: vec![] })?;
    let r = &results[best];
    let params = QGaussianParams::new(grid[best], r.ln_b.exp(), r.mu)?;
    if !r.converged {
        return Err(Error::NonConvergence {
            iterations: r.iterations,
            best_objective: r.objective,
            best_params: vec![params.q, params.b, params.mu],
        });
    }
    Ok(WingFit { wing, params, objective: r.objective, n_points: points.len(), iterations: r.iterations })
}

struct Local {
    ln_b: f64,
    mu: f64,
    objective: f64,
    converged: bool,
    iterations: usize,
}

const FLOOR: f64 = 1e-300;

fn residuals(points: &[TailPoint], wing: Wing, q: f64, ln_b: f64, mu: f64, out: &mut [f64]) -> Option<f64> {
    let params = QGaussianParams { q, b: ln_b.exp(), mu };
    let mut ss = 0.0;
    for (r, pt) in out.iter_mut().zip(points) {
        let model = cdf_wing(pt.x, &params, wing).ok()?;
        *r = model.max(FLOOR).ln() - pt.p.ln();
        ss += *r * *r;
    }
    ss.is_finite().then_some(ss)
}

/// Levenberg–Marquardt on (ln B, μ) at fixed q with a finite-difference
/// Jacobian.
fn refine(points: &[TailPoint], wing: Wing, q: f64, ln_b0: f64, mu0: f64, max_iter: usize) -> Local {
    let n = points.len();
    let mut r = vec![0.0; n];
    let mut rp = vec![0.0; n];
    let mut rm = vec![0.0; n];
    let mut jac = vec![[0.0; 2]; n];
    let (mut ln_b, mut mu) = (ln_b0, mu0);
    let Some(mut obj) = residuals(points, wing, q, ln_b, mu, &mut r) else {
        return Local { ln_b, mu, objective: f64::INFINITY, converged: false, iterations: 0 };
    };
    let mut lambda = 1e-3;
    for it in 0..max_iter {
        // central differences
        let theta = [ln_b, mu];
        for k in 0..2 {
            let h = 1e-6 * (1.0 + theta[k].abs());
            let mut up = theta;
            let mut dn = theta;
            up[k] += h;
            dn[k] -= h;
            let ok = residuals(points, wing, q, up[0], up[1], &mut rp).is_some()
                && residuals(points, wing, q, dn[0], dn[1], &mut rm).is_some();
            if !ok {
                return Local { ln_b, mu, objective: obj, converged: false, iterations: it };
            }
            for i in 0..n {
                jac[i][k] = (rp[i] - rm[i]) / (2.0 * h);
            }
        }
        let (mut a00, mut a01, mut a11, mut g0, mut g1) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for i in 0..n {
            let [j0, j1] = jac[i];
            a00 += j0 * j0;
            a01 += j0 * j1;
            a11 += j1 * j1;
            g0 += j0 * r[i];
            g1 += j1 * r[i];
        }
        let grad = g0.abs().max(g1.abs());
        if grad <= 1e-10 * (1.0 + obj) {
            return Local { ln_b, mu, objective: obj, converged: true, iterations: it };
        }
        let mut accepted = false;
        for _ in 0..30 {
            let d00 = a00 + lambda * a00.max(1e-12);
            let d11 = a11 + lambda * a11.max(1e-12);
            let det = d00 * d11 - a01 * a01;
            if det <= 0.0 || !det.is_finite() {
                lambda *= 10.0;
                continue;
            }
            let s0 = -(d11 * g0 - a01 * g1) / det;
            let s1 = -(d00 * g1 - a01 * g0) / det;
            let (nb, nm) = (ln_b + s0, mu + s1);
            if let Some(new_obj) = residuals(points, wing, q, nb, nm, &mut rp) {
                if new_obj <= obj {
                    let small_step = s0.abs() <= 1e-12 * (1.0 + ln_b.abs()) && s1.abs() <= 1e-12 * (1.0 + mu.abs());
                    let small_gain = obj - new_obj <= 1e-15 * obj.max(1e-300);
                    ln_b = nb;
                    mu = nm;
                    obj = new_obj;
                    r.copy_from_slice(&rp);
                    lambda = (lambda * 0.3).max(1e-12);
                    accepted = true;
                    if small_step || small_gain {
                        return Local { ln_b, mu, objective: obj, converged: true, iterations: it + 1 };
                    }
                    break;
                }
            }
            lambda *= 10.0;
        }
        if !accepted {
            // no descent direction left at machine precision
            return Local { ln_b, mu, objective: obj, converged: true, iterations: it + 1 };
        }
    }
    Local { ln_b, mu, objective: obj, converged: false, iterations: max_iter }
}
