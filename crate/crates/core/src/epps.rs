//! Eigenvalues of 3×3 return correlation matrices as a function of the
//! return time scale, for currency triangles and arbitrary triples.

use nalgebra::Matrix3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{cyclic_orientation, require_aligned, TickSeries};
use crate::returns::{log_returns, standardize};
use crate::rmt::diagonalize;

/// Powers of two from 1 to 512 minutes.
pub fn default_dt_grid() -> Vec<usize> {
    (0..=9).map(|k| 1usize << k).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EppsCurve {
    /// Time scales in minutes.
    pub dt_grid: Vec<usize>,
    /// `[λ₁, λ₂, λ₃]` per time scale, descending.
    pub lambdas: Vec<[f64; 3]>,
    /// Returns entering each correlation matrix after gap exclusion.
    pub n_returns: Vec<usize>,
    /// Row k holds the eigenvector of λ_{k+1} at the largest time scale.
    pub eigenvectors_at_max_dt: [[f64; 3]; 3],
    pub is_triangle: bool,
    /// Labels after orientation; inverted series carry the swapped label.
    pub labels: [String; 3],
    pub inverted: [bool; 3],
}

impl EppsCurve {
    pub fn lambda1(&self) -> Vec<f64> {
        self.lambdas.iter().map(|l| l[0]).collect()
    }
}

/// Correlation eigenvalues of three aligned price series at every time
/// scale of `dt_grid` (minutes).
///
/// Non-overlapping log returns are used at each scale. A time slot is
/// dropped from all three series when any of them touches a carried-forward
/// price inside it. With `triangle` the series are first oriented (inverted
/// as needed) so that their labels chain as A/B, B/C, C/A.
pub fn epps_curve(triple: [&TickSeries; 3], dt_grid: &[usize], triangle: bool) -> Result<EppsCurve> {
    require_aligned(&triple)?;
    if dt_grid.is_empty() || dt_grid.contains(&0) || dt_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::usage("time-scale grid must be non-empty, positive and strictly increasing"));
    }
    let grid = triple[0].grid();
    let step = grid.step();
    let span_minutes = (grid.count() as i64 - 1) * step / 60;
    let max_dt = *dt_grid.last().unwrap();
    if (max_dt as i64) * 100 > span_minutes {
        return Err(Error::usage(format!("largest time scale {max_dt} min exceeds 1% of the {span_minutes} min span")));
    }
    if let Some(dt) = dt_grid.iter().find(|&&dt| (dt as i64 * 60) % step != 0) {
        return Err(Error::usage(format!("time scale {dt} min is not a multiple of the {step} s grid step")));
    }

    let mut inverted = [false; 3];
    let oriented: Vec<TickSeries> = if triangle {
        let labels = [triple[0].label(), triple[1].label(), triple[2].label()];
        inverted = cyclic_orientation(labels).ok_or_else(|| {
            Error::usage(format!("pairs {}, {}, {} do not form a currency triangle", labels[0], labels[1], labels[2]))
        })?;
        triple.iter().zip(inverted).map(|(s, f)| if f { s.inverted() } else { (*s).clone() }).collect()
    } else {
        triple.iter().map(|s| (*s).clone()).collect()
    };

    let points: Vec<([f64; 3], usize, [[f64; 3]; 3])> = dt_grid
        .par_iter()
        .map(|&dt| {
            let steps = (dt as i64 * 60 / step) as usize;
            correlation_point(&oriented, steps).map_err(|e| match e {
                Error::Degenerate(m) => Error::degenerate(format!("at dt = {dt} min: {m}")),
                other => other,
            })
        })
        .collect::<Result<_>>()?;

    Ok(EppsCurve {
        dt_grid: dt_grid.to_vec(),
        lambdas: points.iter().map(|p| p.0).collect(),
        n_returns: points.iter().map(|p| p.1).collect(),
        eigenvectors_at_max_dt: points.last().unwrap().2,
        is_triangle: triangle,
        labels: [oriented[0].label().into(), oriented[1].label().into(), oriented[2].label().into()],
        inverted,
    })
}

fn correlation_point(series: &[TickSeries], steps: usize) -> Result<([f64; 3], usize, [[f64; 3]; 3])> {
    let rets: Vec<_> = series.iter().map(|s| log_returns(s, steps, false)).collect::<Result<_>>()?;
    let n = rets[0].values.len();
    let keep: Vec<usize> = (0..n).filter(|&i| !rets.iter().any(|r| r.gap_flags[i])).collect();
    if keep.len() < 3 {
        return Err(Error::degenerate(format!("only {} gap-free returns", keep.len())));
    }
    let mut z = Vec::with_capacity(3);
    for r in &rets {
        let v: Vec<f64> = keep.iter().map(|&i| r.values[i]).collect();
        let (s, _, _) =
            standardize(&v).ok_or_else(|| Error::degenerate(format!("returns of '{}' have zero variance", r.label)))?;
        z.push(s);
    }
    let m = keep.len() as f64;
    let mut c = Matrix3::<f64>::identity();
    for i in 0..3 {
        for j in 0..3 {
            c[(i, j)] = z[i].iter().zip(&z[j]).map(|(a, b)| a * b).sum::<f64>() / m;
        }
    }
    let c = (c + c.transpose()) * 0.5;
    let dec = diagonalize(&nalgebra::DMatrix::from_iterator(3, 3, c.iter().copied()))?;
    let l = [dec.eigenvalues[0], dec.eigenvalues[1], dec.eigenvalues[2]];
    let mut vecs = [[0.0; 3]; 3];
    for (k, row) in vecs.iter_mut().enumerate() {
        for (b, v) in row.iter_mut().enumerate() {
            *v = dec.eigenvectors[(b, k)];
        }
    }
    Ok((l, keep.len(), vecs))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Saturation {
    /// Smallest time scale reaching the fraction, if λ₁ has saturated.
    pub dt: Option<usize>,
    pub fraction: f64,
    pub saturated: bool,
}

/// Smallest Δt with λ₁(Δt) ≥ fraction · λ₁(Δt_max). A curve whose last step
/// still rises by more than (1 − fraction) of its final value is reported
/// as not saturated.
pub fn saturation_scale(dt_grid: &[usize], lambda1: &[f64], fraction: f64) -> Result<Saturation> {
    if dt_grid.len() != lambda1.len() || lambda1.len() < 5 {
        return Err(Error::usage(format!("saturation needs at least 5 points, got {}", lambda1.len())));
    }
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::usage(format!("fraction must be in (0, 1], got {fraction}")));
    }
    let n = lambda1.len();
    let last = lambda1[n - 1];
    let rise = (last - lambda1[n - 2]) / last;
    if rise > 1.0 - fraction {
        return Ok(Saturation { dt: None, fraction, saturated: false });
    }
    let i = lambda1.iter().position(|&l| l >= fraction * last).unwrap_or(n - 1);
    Ok(Saturation { dt: Some(dt_grid[i]), fraction, saturated: true })
}
