//! The canonical series file: CSV with header `timestamp,value,gap`, epoch
//! seconds, LF line endings. Leading `# key=value` lines carry metadata
//! such as the label.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{ReturnSeries, TickSeries, TimeGrid};

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesFile {
    pub label: String,
    pub grid: TimeGrid,
    pub values: Vec<f64>,
    pub gaps: Vec<bool>,
    /// All `# key=value` metadata lines in file order.
    pub metadata: Vec<(String, String)>,
}

impl SeriesFile {
    pub fn from_ticks(s: &TickSeries) -> Self {
        Self {
            label: s.label().to_string(),
            grid: *s.grid(),
            values: s.values().to_vec(),
            gaps: s.gap_mask().to_vec(),
            metadata: Vec::new(),
        }
    }

    pub fn from_returns(s: &ReturnSeries) -> Self {
        Self {
            label: s.label.clone(),
            grid: s.grid,
            values: s.values.clone(),
            gaps: s.gap_flags.clone(),
            metadata: Vec::new(),
        }
    }

    /// Interprets the values as prices.
    pub fn into_ticks(self) -> Result<TickSeries> {
        TickSeries::new(self.grid, self.values, self.gaps, self.label)
    }

    /// Interprets the values as an already computed series.
    pub fn into_returns(self) -> Result<ReturnSeries> {
        let mut r = ReturnSeries::from_values(self.grid, self.values, self.label)?;
        r.gap_flags = self.gaps;
        Ok(r)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        if !self.label.is_empty() {
            let _ = writeln!(out, "# label={}", self.label);
        }
        for (k, v) in &self.metadata {
            if k != "label" {
                let _ = writeln!(out, "# {k}={v}");
            }
        }
        out.push_str("timestamp,value,gap\n");
        for (i, (v, g)) in self.values.iter().zip(&self.gaps).enumerate() {
            // `{}` on f64 prints the shortest representation that round-trips
            let _ = writeln!(out, "{},{},{}", self.grid.timestamp(i), v, u8::from(*g));
        }
        out
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_csv()).map_err(|source| Error::Io { path: path.display().to_string(), source })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text =
            fs::read_to_string(path).map_err(|source| Error::Io { path: path.display().to_string(), source })?;
        Self::parse(&text)
    }

    /// Parses canonical text. Timestamps must be evenly spaced.
    pub fn parse(text: &str) -> Result<Self> {
        let mut metadata = Vec::new();
        let mut header_seen = false;
        let mut times = Vec::new();
        let mut values = Vec::new();
        let mut gaps = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let l = raw.trim();
            if l.is_empty() {
                continue;
            }
            if let Some(meta) = l.strip_prefix('#') {
                if let Some((k, v)) = meta.trim().split_once('=') {
                    metadata.push((k.trim().to_string(), v.trim().to_string()));
                }
                continue;
            }
            if !header_seen {
                let cols: Vec<&str> = l.split(',').map(str::trim).collect();
                if cols.len() < 2 || cols[0] != "timestamp" || cols[1] != "value" {
                    return Err(Error::Data { line, message: format!("expected header 'timestamp,value,gap', got '{l}'") });
                }
                header_seen = true;
                continue;
            }
            let mut it = l.split(',').map(str::trim);
            let bad = |m: String| Error::Data { line, message: m };
            let t: i64 = it.next().unwrap_or("").parse().map_err(|_| bad(format!("invalid timestamp in '{l}'")))?;
            let v: f64 = it.next().unwrap_or("").parse().map_err(|_| bad(format!("invalid value in '{l}'")))?;
            if !v.is_finite() {
                return Err(bad(format!("non-finite value in '{l}'")));
            }
            let g = match it.next().unwrap_or("0") {
                "0" | "" | "false" => false,
                "1" | "true" => true,
                other => return Err(bad(format!("invalid gap flag '{other}'"))),
            };
            if times.len() >= 2 {
                let step = times[1] - times[0];
                if t - times[times.len() - 1] != step {
                    return Err(bad(format!("timestamp {t} breaks the regular {step} s spacing")));
                }
            } else if let Some(&prev) = times.last() {
                if t <= prev {
                    return Err(bad(format!("timestamp {t} does not increase")));
                }
            }
            times.push(t);
            values.push(v);
            gaps.push(g);
        }
        if times.len() < 2 {
            return Err(Error::data("series file needs at least two samples"));
        }
        let grid = TimeGrid::new(times[0], times[1] - times[0], times.len())?;
        let label = metadata.iter().find(|(k, _)| k == "label").map(|(_, v)| v.clone()).unwrap_or_default();
        Ok(Self { label, grid, values, gaps, metadata })
    }
}
