//! Synthetic series with known statistical properties.
//!
//! Every generator is a pure function of its [`GeneratorSpec`]. Random
//! numbers come from ChaCha8 seeded with the spec's seed; independent series
//! of one spec use separate ChaCha streams, so adding a series never changes
//! the others.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ReturnKind, ReturnSeries, TickSeries, TimeGrid};
use crate::qgaussian::{tail_quantile, QGaussianParams};

/// 21:00 UTC on Friday 2 January 2004.
pub const DEFAULT_START: i64 = 1_073_077_200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Conservation {
    /// Every split preserves its parent's mass.
    Exact,
    /// Each split multiplies its parent's mass by an independent unit-mean
    /// lognormal factor.
    InAverage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorKind {
    IidGaussian,
    Ar1 {
        phi: f64,
    },
    /// Length must be a power of two; 2^m cells.
    BinomialCascade {
        a: f64,
        #[serde(default = "exact")]
        conservation: Conservation,
        /// σ of ln W for the in-average mode.
        #[serde(default = "default_weight_sigma")]
        weight_sigma: f64,
    },
    QGaussianIid {
        q: f64,
        b: f64,
        #[serde(default)]
        mu: f64,
    },
    /// `v(t) = exp(κ u(t))` with u fractional Gaussian noise whose
    /// autocorrelation decays like τ^(−exponent).
    LongMemoryVolatility {
        exponent: f64,
        kappa: f64,
    },
    /// Three rates A/B, B/C, C/A whose log returns sum to zero.
    TriangleConsistentRates {
        sigma: f64,
        /// Length of the rotation blocks; time scales dividing it give
        /// exactly equal return variances.
        block: usize,
    },
    /// x, y = Σ_{j≤L} x(t−j)/(L+1) + noise, and an independent third rate.
    LagCoupledPair {
        lag: usize,
        /// Noise standard deviation relative to the lagged signal's.
        noise: f64,
    },
    /// Unit Gaussian noise plus Poisson-placed dipoles (+S at t, −S at
    /// t+1) with Pareto magnitudes `S = scale · U^(−1/tail_index)`.
    SpikedResidual {
        rate: f64,
        scale: f64,
        tail_index: f64,
    },
}

fn exact() -> Conservation {
    Conservation::Exact
}

fn default_weight_sigma() -> f64 {
    0.3
}

fn default_step() -> i64 {
    60
}

fn default_start() -> i64 {
    DEFAULT_START
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    #[serde(flatten)]
    pub kind: GeneratorKind,
    pub seed: u64,
    /// Samples per generated series (returns, or prices minus one for the
    /// rate generators).
    pub length: usize,
    #[serde(default = "default_start")]
    pub start_epoch: i64,
    #[serde(default = "default_step")]
    pub step: i64,
}

impl GeneratorSpec {
    pub fn new(kind: GeneratorKind, seed: u64, length: usize) -> Self {
        Self { kind, seed, length, start_epoch: DEFAULT_START, step: 60 }
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream(stream);
        r
    }

    fn grid(&self, count: usize) -> Result<TimeGrid> {
        TimeGrid::new(self.start_epoch, self.step, count)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Generated {
    Returns(ReturnSeries),
    Rates(Vec<TickSeries>),
}

impl Generated {
    pub fn returns(self) -> Option<ReturnSeries> {
        match self {
            Generated::Returns(r) => Some(r),
            Generated::Rates(_) => None,
        }
    }

    pub fn rates(self) -> Option<Vec<TickSeries>> {
        match self {
            Generated::Rates(r) => Some(r),
            Generated::Returns(_) => None,
        }
    }
}

pub fn generate(spec: &GeneratorSpec) -> Result<Generated> {
    if spec.length < 2 {
        return Err(Error::usage("generated series need at least two samples"));
    }
    if spec.step <= 0 {
        return Err(Error::usage("step must be positive"));
    }
    let n = spec.length;
    let bad = |msg: String| Err(Error::usage(msg));
    let (values, label, kind) = match spec.kind {
        GeneratorKind::IidGaussian => (gaussian(&mut spec.rng(0), n), "iid_gaussian", ReturnKind::Plain),
        GeneratorKind::Ar1 { phi } => {
            if !(phi.abs() < 1.0) {
                return bad(format!("AR(1) coefficient must satisfy |phi| < 1, got {phi}"));
            }
            (ar1(&mut spec.rng(0), n, phi), "ar1", ReturnKind::Plain)
        }
        GeneratorKind::BinomialCascade { a, conservation, weight_sigma } => {
            (cascade(spec, a, conservation, weight_sigma)?, "binomial_cascade", ReturnKind::Plain)
        }
        GeneratorKind::QGaussianIid { q, b, mu } => {
            let p = QGaussianParams::new(q, b, mu)?;
            if q < 1.0 {
                return bad(format!("sampling needs 1 <= q < 3, got {q}"));
            }
            (q_gaussian(spec, &p)?, "q_gaussian_iid", ReturnKind::Plain)
        }
        GeneratorKind::LongMemoryVolatility { exponent, kappa } => {
            if !(exponent > 0.0 && exponent < 1.0) || !(kappa > 0.0 && kappa.is_finite()) {
                return bad(format!("long memory needs 0 < exponent < 1 and kappa > 0, got {exponent}, {kappa}"));
            }
            let u = fractional_noise(&mut spec.rng(0), n, 1.0 - exponent / 2.0);
            (u.iter().map(|v| (kappa * v).exp()).collect(), "long_memory_volatility", ReturnKind::Volatility)
        }
        GeneratorKind::SpikedResidual { rate, scale, tail_index } => {
            if !(rate >= 0.0 && rate < 0.5) || !(scale >= 0.0) || !(tail_index > 0.0) {
                return bad("spiked residual needs 0 <= rate < 0.5, scale >= 0, tail_index > 0".into());
            }
            (spiked(spec, rate, scale, tail_index), "spiked_residual", ReturnKind::Residual)
        }
        GeneratorKind::TriangleConsistentRates { sigma, block } => return triangle_rates(spec, sigma, block),
        GeneratorKind::LagCoupledPair { lag, noise } => return lag_coupled(spec, lag, noise),
    };
    let mut r = ReturnSeries::from_values(spec.grid(n)?, values, label)?;
    r.kind = kind;
    Ok(Generated::Returns(r))
}

/// Cascade with the chosen conservation rule; an alias of [`generate`]
/// restricted to the cascade kind.
pub fn canonical_cascade(spec: &GeneratorSpec) -> Result<Vec<f64>> {
    match spec.kind {
        GeneratorKind::BinomialCascade { a, conservation, weight_sigma } => cascade(spec, a, conservation, weight_sigma),
        _ => Err(Error::usage("canonical_cascade needs a binomial_cascade spec")),
    }
}

fn gaussian(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

fn ar1(rng: &mut ChaCha8Rng, n: usize, phi: f64) -> Vec<f64> {
    let s = (1.0 - phi * phi).sqrt();
    let mut x = Vec::with_capacity(n);
    let mut prev: f64 = StandardNormal.sample(rng);
    for _ in 0..n {
        let e: f64 = StandardNormal.sample(rng);
        prev = phi * prev + s * e;
        x.push(prev);
    }
    x
}

fn cascade(spec: &GeneratorSpec, a: f64, conservation: Conservation, weight_sigma: f64) -> Result<Vec<f64>> {
    let n = spec.length;
    if !n.is_power_of_two() {
        return Err(Error::usage(format!("cascade length must be a power of two, got {n}")));
    }
    if !(a >= 0.5 && a < 1.0) {
        return Err(Error::usage(format!("cascade parameter must satisfy 0.5 <= a < 1, got {a}")));
    }
    if !(weight_sigma >= 0.0 && weight_sigma.is_finite()) {
        return Err(Error::usage("weight_sigma must be non-negative"));
    }
    let mut rng = spec.rng(0);
    let mut cells = vec![1.0];
    while cells.len() < n {
        let mut next = Vec::with_capacity(2 * cells.len());
        for &w in &cells {
            let total = match conservation {
                Conservation::Exact => w,
                Conservation::InAverage => {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    w * (weight_sigma * z - 0.5 * weight_sigma * weight_sigma).exp()
                }
            };
            next.push(a * total);
            next.push((1.0 - a) * total);
        }
        cells = next;
    }
    Ok(cells)
}

/// Inverse-CDF sampling in fixed chunks, each with its own stream, so the
/// output does not depend on the thread count.
fn q_gaussian(spec: &GeneratorSpec, p: &QGaussianParams) -> Result<Vec<f64>> {
    const CHUNK: usize = 1 << 14;
    let chunks: Vec<Vec<f64>> = (0..spec.length.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut rng = spec.rng(c as u64);
            let len = CHUNK.min(spec.length - c * CHUNK);
            (0..len)
                .map(|_| {
                    // u in (0, 1]; the side is decided by a separate bit
                    let u: f64 = 1.0 - rng.random::<f64>();
                    let d = tail_quantile(0.5 * u, p)?;
                    Ok(if rng.random::<bool>() { p.mu + d } else { p.mu - d })
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    Ok(chunks.concat())
}

/// Fractional Gaussian noise with Hurst exponent `h` by circulant embedding
/// (Davies–Harte); unit variance.
pub fn fractional_noise(rng: &mut ChaCha8Rng, n: usize, h: f64) -> Vec<f64> {
    let gamma = |k: f64| 0.5 * ((k + 1.0).powf(2.0 * h) - 2.0 * k.powf(2.0 * h) + (k - 1.0).abs().powf(2.0 * h));
    let m = 2 * n;
    let mut c: Vec<Complex<f64>> = (0..m)
        .map(|j| {
            let k = if j <= n { j } else { m - j };
            Complex::new(gamma(k as f64), 0.0)
        })
        .collect();
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(m);
    fft.process(&mut c);
    let mut w: Vec<Complex<f64>> = c
        .iter()
        .map(|l| {
            // tiny negative eigenvalues are rounding noise
            let a = (l.re.max(0.0) / m as f64).sqrt();
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Complex::new(a * re, a * im)
        })
        .collect();
    fft.process(&mut w);
    w[..n].iter().map(|z| z.re).collect()
}

fn spiked(spec: &GeneratorSpec, rate: f64, scale: f64, tail_index: f64) -> Vec<f64> {
    let mut x = gaussian(&mut spec.rng(0), spec.length);
    let mut rng = spec.rng(1);
    let n = spec.length;
    for t in 0..n - 1 {
        if rng.random::<f64>() < rate {
            let u: f64 = 1.0 - rng.random::<f64>();
            let s = scale * u.powf(-1.0 / tail_index) * if rng.random::<bool>() { 1.0 } else { -1.0 };
            x[t] += s;
            x[t + 1] -= s;
        }
    }
    x
}

fn prices(spec: &GeneratorSpec, log_price: &[f64], label: &str) -> Result<TickSeries> {
    let values = log_price.iter().map(|p| p.exp()).collect();
    TickSeries::new(spec.grid(log_price.len())?, values, vec![false; log_price.len()], label)
}

fn cumsum(d: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    std::iter::once(0.0)
        .chain(d.iter().map(|v| {
            acc += v;
            acc
        }))
        .collect()
}

/// Increments X, Y, Z = −X − Y are cut into blocks; at block position p
/// series s takes block ⌊p/3⌋ of part (p + s) mod 3. The three log-rate
/// increments cancel at every step, and each series contains every block of
/// every part exactly once, so all three have equal return variance at any
/// time scale dividing `block`.
fn triangle_rates(spec: &GeneratorSpec, sigma: f64, block: usize) -> Result<Generated> {
    let n = spec.length;
    if block == 0 || n % (3 * block) != 0 {
        return Err(Error::usage(format!("triangle length {n} must be a positive multiple of 3 x block ({block})")));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::usage("sigma must be positive"));
    }
    let third = n / 3;
    let x: Vec<f64> = gaussian(&mut spec.rng(0), third).iter().map(|v| sigma * v).collect();
    let y: Vec<f64> = gaussian(&mut spec.rng(1), third).iter().map(|v| sigma * v).collect();
    let z: Vec<f64> = x.iter().zip(&y).map(|(a, b)| -a - b).collect();
    let parts = [&x, &y, &z];
    let layout = |s: usize| -> Vec<f64> {
        let mut d = Vec::with_capacity(n);
        for p in 0..n / block {
            let j = (p / 3) * block;
            d.extend_from_slice(&parts[(p + s) % 3][j..j + block]);
        }
        d
    };
    let labels = ["A/B", "B/C", "C/A"];
    let series = (0..3).map(|s| prices(spec, &cumsum(&layout(s)), labels[s])).collect::<Result<_>>()?;
    Ok(Generated::Rates(series))
}

fn lag_coupled(spec: &GeneratorSpec, lag: usize, noise: f64) -> Result<Generated> {
    let n = spec.length;
    if lag + 1 >= n || !(noise >= 0.0) {
        return Err(Error::usage(format!("lag must be below the length and noise non-negative, got {lag}, {noise}")));
    }
    let x = gaussian(&mut spec.rng(0), n + lag);
    let eps = gaussian(&mut spec.rng(1), n);
    let third = gaussian(&mut spec.rng(2), n);
    let w = 1.0 / (lag + 1) as f64;
    let sig_sd = ((lag + 1) as f64).sqrt() * w;
    // running window sum of x over [t, t + lag], i.e. lags 0..=L of x(t + lag)
    let mut window: f64 = x[..=lag].iter().sum();
    let mut y = Vec::with_capacity(n);
    for t in 0..n {
        if t > 0 {
            window += x[t + lag] - x[t - 1];
        }
        y.push(w * window + noise * sig_sd * eps[t]);
    }
    let scale = 1e-3;
    let dx: Vec<f64> = x[lag..].iter().map(|v| scale * v).collect();
    let dy: Vec<f64> = y.iter().map(|v| scale * v / sig_sd).collect();
    let dz: Vec<f64> = third.iter().map(|v| scale * v).collect();
    Ok(Generated::Rates(vec![
        prices(spec, &cumsum(&dx), "X/USD")?,
        prices(spec, &cumsum(&dy), "Y/USD")?,
        prices(spec, &cumsum(&dz), "Z/USD")?,
    ]))
}
