//! Log returns, normalization, triangle residuals and volatility detrending.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{require_aligned, ReturnKind, ReturnSeries, TickSeries, TimeGrid, Triangle};
use crate::stats::mean_std;

/// Log returns `ln x(t_i + dt) - ln x(t_i)`.
///
/// With `overlap` every grid point starts a return (`count - dt` values);
/// otherwise returns are taken at stride `dt` over disjoint intervals. A
/// return is gap-flagged when any price it touches was carried forward.
pub fn log_returns(series: &TickSeries, dt_steps: usize, overlap: bool) -> Result<ReturnSeries> {
    let n = series.len();
    if dt_steps == 0 || dt_steps >= n {
        return Err(Error::usage(format!("dt_steps must be in 1..{n}, got {dt_steps}")));
    }
    let x = series.values();
    let gaps = series.gap_mask();
    let stride = if overlap { 1 } else { dt_steps };
    let count = if overlap { n - dt_steps } else { (n - 1) / dt_steps };
    let logs: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let mut values = Vec::with_capacity(count);
    let mut flags = Vec::with_capacity(count);
    for k in 0..count {
        let i = k * stride;
        values.push(logs[i + dt_steps] - logs[i]);
        flags.push(gaps[i..=i + dt_steps].iter().any(|&g| g));
    }
    let g = series.grid();
    let grid = TimeGrid::derived(g.start_epoch(), g.step() * stride as i64, count)?;
    Ok(ReturnSeries {
        grid,
        values,
        gap_flags: flags,
        dt_steps,
        kind: ReturnKind::Plain,
        normalized: false,
        mean_removed: 0.0,
        std_used: 1.0,
        label: series.label().to_string(),
    })
}

/// Removes the full-period mean and divides by the population standard
/// deviation.
pub fn normalize(returns: &ReturnSeries) -> Result<ReturnSeries> {
    let (values, mean, std) = standardize(&returns.values)
        .ok_or_else(|| Error::degenerate(format!("series '{}' has zero variance", returns.label)))?;
    Ok(ReturnSeries { values, normalized: true, mean_removed: mean, std_used: std, ..returns.clone() })
}

/// Zero-mean, unit-variance copy of `x`, or `None` for (numerically)
/// constant input.
pub fn standardize(x: &[f64]) -> Option<(Vec<f64>, f64, f64)> {
    if x.is_empty() {
        return None;
    }
    let (m, s) = mean_std(x);
    if !(s > 0.0) || !s.is_finite() || s <= 1e-13 * m.abs() {
        return None;
    }
    Some((x.iter().map(|v| (v - m) / s).collect(), m, s))
}

/// Sum of the three cyclic returns of a currency triangle.
pub fn residual_returns(triangle: &Triangle) -> Result<ReturnSeries> {
    let [a, b, c] = triangle.series();
    require_aligned(&[a, b, c])?;
    let values = a.values.iter().zip(&b.values).zip(&c.values).map(|((x, y), z)| x + y + z).collect();
    let flags = (0..a.len()).map(|i| a.gap_flags[i] || b.gap_flags[i] || c.gap_flags[i]).collect();
    let pairs = triangle.pairs();
    Ok(ReturnSeries {
        values,
        gap_flags: flags,
        kind: ReturnKind::Residual,
        normalized: false,
        mean_removed: 0.0,
        std_used: 1.0,
        label: format!("{}+{}+{}", pairs[0], pairs[1], pairs[2]),
        ..a.clone()
    })
}

/// Absolute value of plain returns.
pub fn volatility(returns: &ReturnSeries) -> Result<ReturnSeries> {
    if returns.kind != ReturnKind::Plain {
        return Err(Error::usage(format!("volatility needs plain returns, got {:?}", returns.kind)));
    }
    Ok(ReturnSeries {
        values: returns.values.iter().map(|v| v.abs()).collect(),
        kind: ReturnKind::Volatility,
        ..returns.clone()
    })
}

/// Per time-of-day standard deviation of a volatility series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailyVolatilityProfile {
    /// Grid step the slots refer to, in seconds.
    pub step: i64,
    /// `sigma[s]` belongs to the slot starting `s * step` seconds after 00:00 UTC.
    pub sigma: Vec<f64>,
}

impl DailyVolatilityProfile {
    pub fn samples_per_day(&self) -> usize {
        self.sigma.len()
    }

    pub fn flat(step: i64, value: f64) -> Result<Self> {
        let spd = samples_per_day(step)?;
        Ok(Self { step, sigma: vec![value; spd] })
    }

    #[inline]
    fn slot(&self, timestamp: i64) -> usize {
        (timestamp.rem_euclid(86_400) / self.step) as usize
    }
}

fn samples_per_day(step: i64) -> Result<usize> {
    if step <= 0 || 86_400 % step != 0 {
        return Err(Error::usage(format!("grid step {step} s does not divide a day")));
    }
    Ok((86_400 / step) as usize)
}

/// Population standard deviation of the non-gap samples of each
/// time-of-day slot. Slots without data get `sigma = 0`.
pub fn daily_profile(vol: &ReturnSeries) -> Result<DailyVolatilityProfile> {
    let step = vol.grid.step();
    let spd = samples_per_day(step)?;
    let mut n = vec![0usize; spd];
    let mut sum = vec![0.0; spd];
    let mut profile = DailyVolatilityProfile { step, sigma: vec![0.0; spd] };
    for (i, v) in vol.values.iter().enumerate() {
        if vol.gap_flags[i] {
            continue;
        }
        let s = profile.slot(vol.grid.timestamp(i));
        n[s] += 1;
        sum[s] += v;
    }
    let means: Vec<f64> = sum.iter().zip(&n).map(|(s, &k)| if k > 0 { s / k as f64 } else { 0.0 }).collect();
    let mut ss = vec![0.0; spd];
    for (i, v) in vol.values.iter().enumerate() {
        if vol.gap_flags[i] {
            continue;
        }
        let s = profile.slot(vol.grid.timestamp(i));
        ss[s] += (v - means[s]).powi(2);
    }
    for s in 0..spd {
        if n[s] > 0 {
            profile.sigma[s] = (ss[s] / n[s] as f64).sqrt();
        }
    }
    Ok(profile)
}

/// Divides each sample by the standard deviation of its time-of-day slot.
pub fn remove_daily_trend(vol: &ReturnSeries, profile: &DailyVolatilityProfile) -> Result<ReturnSeries> {
    if vol.kind != ReturnKind::Volatility {
        return Err(Error::usage("daily detrending applies to volatility series"));
    }
    if profile.step != vol.grid.step() {
        return Err(Error::usage(format!(
            "profile step {} s differs from series step {} s",
            profile.step,
            vol.grid.step()
        )));
    }
    let mut values = Vec::with_capacity(vol.len());
    for (i, v) in vol.values.iter().enumerate() {
        let s = profile.slot(vol.grid.timestamp(i));
        let sigma = profile.sigma[s];
        if !(sigma > 0.0) {
            return Err(Error::degenerate(format!("daily profile has zero deviation in slot {s}")));
        }
        values.push(v / sigma);
    }
    Ok(ReturnSeries { values, ..vol.clone() })
}
