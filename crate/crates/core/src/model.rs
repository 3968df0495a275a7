//! Shared domain types: the uniform time grid, price series, return series
//! and currency triangles.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Mismatch, Result};

/// Default sampling step (one minute).
pub const DEFAULT_STEP: i64 = 60;

/// Uniform sampling grid in integer UTC seconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeGrid {
    start_epoch: i64,
    step: i64,
    count: usize,
}

impl TimeGrid {
    pub fn new(start_epoch: i64, step: i64, count: usize) -> Result<Self> {
        if count < 2 {
            return Err(Error::usage(format!("time grid needs at least 2 samples, got {count}")));
        }
        Self::derived(start_epoch, step, count)
    }

    /// Grid for derived series (returns), which may hold a single sample.
    pub(crate) fn derived(start_epoch: i64, step: i64, count: usize) -> Result<Self> {
        if step <= 0 {
            return Err(Error::usage(format!("grid step must be positive, got {step}")));
        }
        if count == 0 {
            return Err(Error::usage("grid is empty"));
        }
        Ok(Self { start_epoch, step, count })
    }

    pub fn start_epoch(&self) -> i64 {
        self.start_epoch
    }

    pub fn step(&self) -> i64 {
        self.step
    }

    pub fn count(&self) -> usize {
        self.count
    }

    #[inline]
    pub fn timestamp(&self, i: usize) -> i64 {
        self.start_epoch + i as i64 * self.step
    }

    pub fn last_timestamp(&self) -> i64 {
        self.timestamp(self.count - 1)
    }

    /// First field in which `other` differs from `self`.
    pub fn mismatch(&self, other: &TimeGrid) -> Option<Mismatch> {
        if self.start_epoch != other.start_epoch {
            Some(Mismatch::Start)
        } else if self.step != other.step {
            Some(Mismatch::Step)
        } else if self.count != other.count {
            Some(Mismatch::Count)
        } else {
            None
        }
    }
}

/// Prices of one currency pair on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickSeries {
    grid: TimeGrid,
    values: Vec<f64>,
    gap_mask: Vec<bool>,
    label: String,
}

impl TickSeries {
    pub fn new(grid: TimeGrid, values: Vec<f64>, gap_mask: Vec<bool>, label: impl Into<String>) -> Result<Self> {
        if values.len() != grid.count() || gap_mask.len() != grid.count() {
            return Err(Error::usage(format!(
                "series length mismatch: grid {}, values {}, gap mask {}",
                grid.count(),
                values.len(),
                gap_mask.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::data(format!("price at index {i} is not strictly positive: {}", values[i])));
        }
        Ok(Self { grid, values, gap_mask, label: label.into() })
    }

    /// Series without gaps starting at `start_epoch` with the given step.
    pub fn from_prices(start_epoch: i64, step: i64, values: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        let grid = TimeGrid::new(start_epoch, step, values.len())?;
        let gaps = vec![false; values.len()];
        Self::new(grid, values, gaps, label)
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn gap_mask(&self) -> &[bool] {
        &self.gap_mask
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// The same pair quoted the other way round (B/A instead of A/B).
    pub fn inverted(&self) -> Self {
        let label = match parse_pair(&self.label) {
            Some((a, b)) => format!("{b}/{a}"),
            None => self.label.clone(),
        };
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| 1.0 / v).collect(),
            gap_mask: self.gap_mask.clone(),
            label,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReturnKind {
    Plain,
    Residual,
    Volatility,
}

/// Log returns (or a series derived from them) at a fixed time scale.
///
/// Each value is labelled with the start time of its interval, so
/// `grid.timestamp(i)` is `t_i` in `ln x(t_i + dt) - ln x(t_i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnSeries {
    pub grid: TimeGrid,
    pub values: Vec<f64>,
    /// True where the return spans at least one carried-forward price.
    pub gap_flags: Vec<bool>,
    pub dt_steps: usize,
    pub kind: ReturnKind,
    pub normalized: bool,
    pub mean_removed: f64,
    pub std_used: f64,
    pub label: String,
}

impl ReturnSeries {
    /// Wraps an arbitrary real-valued series (e.g. a generated one) as a
    /// plain, unnormalized series at unit time scale.
    pub fn from_values(grid: TimeGrid, values: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if values.len() != grid.count() {
            return Err(Error::usage(format!(
                "series length mismatch: grid {}, values {}",
                grid.count(),
                values.len()
            )));
        }
        let n = values.len();
        Ok(Self {
            grid,
            values,
            gap_flags: vec![false; n],
            dt_steps: 1,
            kind: ReturnKind::Plain,
            normalized: false,
            mean_removed: 0.0,
            std_used: 1.0,
            label: label.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Anything living on a [`TimeGrid`].
pub trait Gridded {
    fn time_grid(&self) -> &TimeGrid;
}

impl Gridded for TimeGrid {
    fn time_grid(&self) -> &TimeGrid {
        self
    }
}

impl Gridded for TickSeries {
    fn time_grid(&self) -> &TimeGrid {
        &self.grid
    }
}

impl Gridded for ReturnSeries {
    fn time_grid(&self) -> &TimeGrid {
        &self.grid
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alignment {
    pub aligned: bool,
    /// Index of the first series whose grid differs from the first one.
    pub series_index: Option<usize>,
    pub mismatch: Option<Mismatch>,
}

/// Checks that every series shares the grid of the first one.
pub fn validate_alignment<S: Gridded + ?Sized>(series: &[&S]) -> Result<Alignment> {
    let (first, rest) = series.split_first().ok_or_else(|| Error::usage("alignment check needs at least one series"))?;
    let reference = first.time_grid();
    for (i, s) in rest.iter().enumerate() {
        if let Some(m) = reference.mismatch(s.time_grid()) {
            return Ok(Alignment { aligned: false, series_index: Some(i + 1), mismatch: Some(m) });
        }
    }
    Ok(Alignment { aligned: true, series_index: None, mismatch: None })
}

/// Same as [`validate_alignment`] but turns a mismatch into an error.
pub fn require_aligned<S: Gridded + ?Sized>(series: &[&S]) -> Result<()> {
    let a = validate_alignment(series)?;
    match a.mismatch {
        Some(m) => Err(Error::Alignment(m)),
        None => Ok(()),
    }
}

/// Splits a pair label "A/B" into its currency codes.
pub fn parse_pair(label: &str) -> Option<(&str, &str)> {
    let (a, b) = label.split_once('/')?;
    let (a, b) = (a.trim(), b.trim());
    if a.is_empty() || b.is_empty() || b.contains('/') {
        return None;
    }
    Some((a, b))
}

/// Three return series whose pairs chain cyclically: A/B, B/C, C/A.
#[derive(Debug, Clone, PartialEq)]
pub struct Triangle {
    series: [ReturnSeries; 3],
}

impl Triangle {
    pub fn new(series: [ReturnSeries; 3]) -> Result<Self> {
        check_cycle([&series[0].label, &series[1].label, &series[2].label])?;
        require_aligned(&[&series[0], &series[1], &series[2]])?;
        Ok(Self { series })
    }

    pub fn pairs(&self) -> [&str; 3] {
        [&self.series[0].label, &self.series[1].label, &self.series[2].label]
    }

    pub fn series(&self) -> &[ReturnSeries; 3] {
        &self.series
    }
}

/// Verifies that the second currency of pair k equals the first of pair k+1.
pub fn check_cycle(labels: [&str; 3]) -> Result<()> {
    let mut pairs = Vec::with_capacity(3);
    for l in labels {
        pairs.push(parse_pair(l).ok_or_else(|| Error::usage(format!("'{l}' is not a pair label of the form A/B")))?);
    }
    for k in 0..3 {
        let next = (k + 1) % 3;
        if pairs[k].1 != pairs[next].0 {
            return Err(Error::usage(format!(
                "pairs {} and {} do not chain: {} != {}",
                labels[k], labels[next], pairs[k].1, pairs[next].0
            )));
        }
    }
    Ok(())
}

/// Decides which of three pair labels must be inverted so that they chain
/// cyclically. Returns `None` when no orientation works.
pub fn cyclic_orientation(labels: [&str; 3]) -> Option<[bool; 3]> {
    let pairs: Vec<(&str, &str)> = labels.iter().map(|l| parse_pair(l)).collect::<Option<_>>()?;
    for mask in 0..8u8 {
        let flip = [mask & 1 != 0, mask & 2 != 0, mask & 4 != 0];
        let oriented: Vec<(&str, &str)> = pairs
            .iter()
            .zip(flip)
            .map(|(&(a, b), f)| if f { (b, a) } else { (a, b) })
            .collect();
        if (0..3).all(|k| oriented[k].1 == oriented[(k + 1) % 3].0) {
            return Some(flip);
        }
    }
    None
}
