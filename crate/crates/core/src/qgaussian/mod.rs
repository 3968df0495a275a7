//! The q-Gaussian family: density, cumulative wings and per-wing fits.
//!
//! For 1 < q < 3 the density is
//! `p(x) = N_q · e_q(−B_q (x − μ_q)²)` with the q-exponential
//! `e_q(x) = [1 + (1 − q) x]^(1/(1−q))`. It decays like `x^(2/(1−q))`, so
//! the cumulative wings fall off like `x^(1 + 2/(1−q))`; q = 3/2 gives the
//! inverse cubic law and q → 1 the Gaussian.

mod ecdf;
mod fit;
mod hypergeometric;

use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;
use statrs::function::erf::erfc;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

pub use ecdf::{EmpiricalCdf, TailPoint};
pub use fit::{fit, fit_both, FitOptions, QGaussianFit, WingFit};
pub use hypergeometric::hyp2f1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Wing {
    Left,
    Right,
}

impl std::fmt::Display for Wing {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Wing::Left => "left",
            Wing::Right => "right",
        })
    }
}

/// q-Gaussian parameters. `b` is the inverse width `B_q`, `mu` the
/// location.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QGaussianParams {
    pub q: f64,
    pub b: f64,
    pub mu: f64,
}

impl QGaussianParams {
    pub fn new(q: f64, b: f64, mu: f64) -> Result<Self> {
        let p = Self { q, b, mu };
        p.validate()?;
        Ok(p)
    }

    /// Parameters from the generalized width: `B_q = 1 / ((3 − q) σ_q²)`.
    pub fn from_sigma(q: f64, sigma: f64, mu: f64) -> Result<Self> {
        Self::new(q, 1.0 / ((3.0 - q) * sigma * sigma), mu)
    }

    /// Generalized width `σ_q`.
    pub fn sigma(&self) -> f64 {
        1.0 / ((3.0 - self.q) * self.b).sqrt()
    }

    /// Variance of the distribution; infinite for q ≥ 5/3.
    pub fn variance(&self) -> f64 {
        if self.q >= 5.0 / 3.0 {
            f64::INFINITY
        } else {
            1.0 / (self.b * (5.0 - 3.0 * self.q))
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.q.is_finite() && self.b.is_finite() && self.mu.is_finite()) {
            return Err(Error::usage("q-Gaussian parameters must be finite"));
        }
        if self.q >= 3.0 {
            return Err(Error::usage(format!("q = {} is not normalizable (q must be < 3)", self.q)));
        }
        if !(self.b > 0.0) {
            return Err(Error::usage(format!("B_q must be positive, got {}", self.b)));
        }
        Ok(())
    }

    /// Normalization constant `N_q`.
    pub fn normalization(&self) -> f64 {
        let (q, b) = (self.q, self.b);
        if is_gaussian(q) {
            (b / std::f64::consts::PI).sqrt()
        } else if q < 1.0 {
            let g = ln_gamma((5.0 - 3.0 * q) / (2.0 - 2.0 * q)) - ln_gamma((2.0 - q) / (1.0 - q));
            g.exp() * ((1.0 - q) * b / std::f64::consts::PI).sqrt()
        } else {
            let beta = 1.0 / (q - 1.0);
            let g = ln_gamma(beta) - ln_gamma((3.0 - q) * beta / 2.0);
            g.exp() * ((q - 1.0) * b / std::f64::consts::PI).sqrt()
        }
    }
}

const GAUSSIAN_EPS: f64 = 1e-12;

fn is_gaussian(q: f64) -> bool {
    (q - 1.0).abs() < GAUSSIAN_EPS
}

/// `e_q(x) = [1 + (1 − q) x]^(1/(1−q))`; `exp(x)` at q = 1 and zero
/// outside the support when q < 1.
pub fn q_exponential(x: f64, q: f64) -> f64 {
    if is_gaussian(q) {
        return x.exp();
    }
    let base = 1.0 + (1.0 - q) * x;
    if base <= 0.0 {
        // compact support for q < 1; for q > 1 the bracket only vanishes
        // at x = 1/(q−1) where the function diverges
        return if q < 1.0 { 0.0 } else { f64::INFINITY };
    }
    base.powf(1.0 / (1.0 - q))
}

/// Probability density.
pub fn pdf(x: f64, params: &QGaussianParams) -> Result<f64> {
    params.validate()?;
    let d = x - params.mu;
    Ok(params.normalization() * q_exponential(-params.b * d * d, params.q))
}

/// Cumulative wing probability: `P₊(x) = P(X ≥ x)` for the right wing and
/// `P₋(x) = P(X ≤ x)` for the left one.
///
/// This equals the closed form
/// `½ ∓ N_q (x − μ) ₂F₁(½, 1/(q−1); 3/2; −B_q (q−1)(x − μ)²)`, but that
/// form subtracts two numbers close to ½ in the tails, and for q near 1
/// the ₂F₁ itself cancels catastrophically. The tail mass is therefore
/// evaluated as a regularized incomplete beta function.
pub fn cdf_wing(x: f64, params: &QGaussianParams, wing: Wing) -> Result<f64> {
    params.validate()?;
    let q = params.q;
    if q < 1.0 - GAUSSIAN_EPS {
        return Err(Error::usage(format!("cumulative wings are defined for 1 <= q < 3, got q = {q}")));
    }
    let d = x - params.mu;
    let outward = match wing {
        Wing::Right => d > 0.0,
        Wing::Left => d < 0.0,
    };
    let tail = tail_mass(d.abs(), params)?;
    Ok(if outward { tail } else { 1.0 - tail })
}

/// Mass beyond `μ + d` (d ≥ 0) of one side of the distribution.
pub fn tail_mass(d: f64, params: &QGaussianParams) -> Result<f64> {
    let q = params.q;
    let b = params.b;
    if is_gaussian(q) {
        return Ok(0.5 * erfc(b.sqrt() * d));
    }
    // ∫_s^∞ (1+v²)^(−β) dv over its value at s = 0 is I_y(β−½, ½),
    // y = 1/(1+s²), s² = (q−1) B_q d²
    let beta = 1.0 / (q - 1.0);
    let y = 1.0 / (1.0 + (q - 1.0) * b * d * d);
    Ok(0.5 * beta_reg(beta - 0.5, 0.5, y))
}

/// Distance `d ≥ 0` from the centre with `tail_mass(d) = prob`, for
/// `0 < prob ≤ ½`.
pub fn tail_quantile(prob: f64, params: &QGaussianParams) -> Result<f64> {
    if !(prob > 0.0 && prob <= 0.5) {
        return Err(Error::usage(format!("tail probability must be in (0, 0.5], got {prob}")));
    }
    if prob == 0.5 {
        return Ok(0.0);
    }
    let target = prob.ln();
    // bracket [lo, hi] with tail(lo) > prob >= tail(hi)
    let scale = params.sigma();
    let (mut lo, mut hi) = (0.0, scale);
    while tail_mass(hi, params)? > prob {
        lo = hi;
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(Error::domain("tail quantile bracket overflow"));
        }
    }
    let mut d = 0.5 * (lo + hi);
    for _ in 0..100 {
        let t = tail_mass(d, params)?;
        if t > prob {
            lo = d;
        } else {
            hi = d;
        }
        // Newton on ln T(d): d/dd ln T = −p(d)/T
        let dens = pdf(params.mu + d, params)?;
        let mut next = if t > 0.0 && dens > 0.0 { d + (t.ln() - target) * t / dens } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - d).abs() <= 1e-15 * d.max(1e-300) || hi - lo <= 1e-15 * hi {
            return Ok(next);
        }
        d = next;
    }
    Ok(d)
}
