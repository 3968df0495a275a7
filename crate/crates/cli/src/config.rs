//! The run configuration: everything a run needs, serializable to TOML so
//! that a finished run can be repeated from the file it emitted.

use std::fs;
use std::path::{Path, PathBuf};

use fxstats::epps::default_dt_grid;
use fxstats::ingest::{FormatSpec, WeekWindow};
use fxstats::mfdfa::MfdfaConfig;
use fxstats::qgaussian::FitOptions;
use fxstats::rmt::DEFAULT_OUTLIER_THRESHOLD;
use fxstats::synth::GeneratorSpec;
use fxstats::{Error, Result};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub source: Source,
    /// How price series become return series. Filled in with defaults when
    /// a single-series analysis receives prices.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub returns: Option<ReturnsConfig>,
    #[serde(default)]
    pub analyses: Analyses,
}

/// Either input files or a generator, not both.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Source {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub paths: Vec<PathBuf>,
    /// Column layout of raw price files; canonical series files when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<FormatSpec>,
    /// Labels for raw files, one per path; the file stem otherwise.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub labels: Vec<String>,
    /// Overrides what canonical files hold; read from their metadata
    /// otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<ValueKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueKind {
    Prices,
    Series,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum PreparedKind {
    Plain,
    Volatility,
    Residual,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReturnsConfig {
    pub dt_steps: usize,
    pub overlap: bool,
    pub kind: PreparedKind,
    pub normalize: bool,
    /// Divide volatility by its time-of-day profile.
    #[serde(default)]
    pub detrend_daily: bool,
}

impl Default for ReturnsConfig {
    fn default() -> Self {
        Self { dt_steps: 1, overlap: true, kind: PreparedKind::Plain, normalize: true, detrend_daily: false }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Analyses {
    /// Write the loaded (and prepared) series in the canonical format.
    #[serde(default)]
    pub write_series: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distfit: Option<DistfitConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub autocorr: Option<AutocorrConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rmt: Option<RmtConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mfdfa: Option<MfdfaRun>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epps: Option<EppsConfig>,
}

impl Analyses {
    pub fn needs_single_series(&self) -> bool {
        self.distfit.is_some() || self.autocorr.is_some() || self.rmt.is_some() || self.mfdfa.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistfitConfig {
    #[serde(flatten)]
    pub options: FitOptions,
    /// Standardize the series first so the fit range is in units of σ.
    pub normalize: bool,
}

impl Default for DistfitConfig {
    fn default() -> Self {
        Self { options: FitOptions::default(), normalize: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AutocorrConfig {
    pub max_lag: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit_window: Option<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RmtConfig {
    pub window: WeekWindow,
    /// Number of leading eigensignals written out.
    pub modes: usize,
    pub outlier_threshold: f64,
    pub histogram_bins: usize,
}

impl Default for RmtConfig {
    fn default() -> Self {
        Self { window: WeekWindow::default(), modes: 2, outlier_threshold: DEFAULT_OUTLIER_THRESHOLD, histogram_bins: 100 }
    }
}

/// MFDFA settings. Fields left out are derived from the series length.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MfdfaRun {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_min: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub poly_order: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaling_window: Option<(usize, usize)>,
    /// Analyze a shuffled copy of the series instead.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shuffle_seed: Option<u64>,
}

impl MfdfaRun {
    pub fn resolve(&self, count: usize) -> MfdfaConfig {
        let d = MfdfaConfig::for_length(count);
        let n_min = self.n_min.unwrap_or(d.n_min);
        let n_max = self.n_max.unwrap_or(d.n_max);
        MfdfaConfig {
            r_values: self.r_values.clone().unwrap_or(d.r_values),
            n_min,
            n_max,
            n_count: self.n_count.unwrap_or(d.n_count),
            poly_order: self.poly_order.unwrap_or(d.poly_order),
            scaling_window: self.scaling_window.unwrap_or((n_min.max(d.scaling_window.0), d.scaling_window.1.min(n_max))),
        }
    }

    pub fn from_config(c: &MfdfaConfig, shuffle_seed: Option<u64>) -> Self {
        Self {
            r_values: Some(c.r_values.clone()),
            n_min: Some(c.n_min),
            n_max: Some(c.n_max),
            n_count: Some(c.n_count),
            poly_order: Some(c.poly_order),
            scaling_window: Some(c.scaling_window),
            shuffle_seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EppsConfig {
    /// Time scales in minutes.
    pub dt_grid: Vec<usize>,
    pub triangle: bool,
    pub saturation_fraction: f64,
}

impl Default for EppsConfig {
    fn default() -> Self {
        Self { dt_grid: default_dt_grid(), triangle: false, saturation_fraction: 0.95 }
    }
}

impl RunConfig {
    pub fn new(source: Source) -> Self {
        Self { schema_version: SCHEMA_VERSION, source, returns: None, analyses: Analyses::default() }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            fs::read_to_string(path).map_err(|source| Error::Io { path: path.display().to_string(), source })?;
        let mut cfg: RunConfig =
            toml::from_str(&text).map_err(|e| Error::usage(format!("{}: invalid config: {e}", path.display())))?;
        // relative input paths are relative to the config file
        let base = path.parent().unwrap_or(Path::new(""));
        for p in &mut cfg.source.paths {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::usage(format!("config cannot be written as TOML: {e}")))
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::usage(format!(
                "unsupported config schema_version {}, expected {SCHEMA_VERSION}",
                self.schema_version
            )));
        }
        let s = &self.source;
        match (s.paths.is_empty(), s.generator.is_some()) {
            (true, false) => return Err(Error::usage("source needs input paths or a generator")),
            (false, true) => return Err(Error::usage("source takes input paths or a generator, not both")),
            _ => {}
        }
        if !s.labels.is_empty() && s.labels.len() != s.paths.len() {
            return Err(Error::usage(format!("{} labels given for {} input files", s.labels.len(), s.paths.len())));
        }
        if let Some(r) = &self.returns {
            if r.dt_steps == 0 {
                return Err(Error::usage("dt_steps must be positive"));
            }
            if r.detrend_daily && r.kind != PreparedKind::Volatility {
                return Err(Error::usage("daily detrending applies to volatility only"));
            }
        }
        Ok(())
    }
}
