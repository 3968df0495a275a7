//! Command-line flags and their translation into a [`RunConfig`].

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fxstats::epps::default_dt_grid;
use fxstats::ingest::{Column, FormatSpec, TimeFormat, WeekInstant, WeekWindow};
use fxstats::qgaussian::FitOptions;
use fxstats::synth::{Conservation, GeneratorKind, GeneratorSpec, DEFAULT_START};
use fxstats::{Error, Result};

use crate::config::*;

#[derive(Debug, Parser)]
#[command(name = "fxstats", version, about = "Statistics of high-frequency exchange-rate series")]
pub struct Cli {
    /// Directory receiving the result files.
    #[arg(long, short, global = true, default_value = ".")]
    pub out: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert delimited price files to the canonical series format.
    Ingest {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[command(flatten)]
        format: FormatArgs,
    },
    /// Compute log returns, residuals or volatility and write them out.
    Returns {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        returns: ReturnsArgs,
    },
    /// Fit q-Gaussians to both tails of the return distribution.
    Distfit {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        returns: ReturnsArgs,
        /// Outward distance range in units of σ, e.g. `0,3`.
        #[arg(long, value_parser = parse_f64_pair)]
        range: Option<(f64, f64)>,
        #[arg(long, value_parser = parse_f64_pair)]
        q_bounds: Option<(f64, f64)>,
        #[arg(long)]
        q_step: Option<f64>,
        #[arg(long)]
        max_points: Option<usize>,
        #[arg(long)]
        min_rank: Option<usize>,
    },
    /// Autocorrelation function and optional power-law decay fit.
    Autocorr {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        returns: ReturnsArgs,
        #[arg(long, default_value_t = 1000)]
        max_lag: usize,
        /// Lag window `lo,hi` for the power-law fit.
        #[arg(long, value_parser = parse_usize_pair)]
        fit: Option<(usize, usize)>,
    },
    /// Week-by-week correlation matrix, its spectrum and eigensignals.
    Rmt {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        returns: ReturnsArgs,
        /// Start of the weekly window, e.g. `sun:21:00`.
        #[arg(long, value_parser = parse_week_instant)]
        week_start: Option<WeekInstant>,
        #[arg(long, value_parser = parse_week_instant)]
        week_end: Option<WeekInstant>,
        /// Number of leading eigensignals written out.
        #[arg(long, default_value_t = 2)]
        modes: usize,
        /// Outlier threshold in standard deviations.
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long, default_value_t = 100)]
        bins: usize,
    },
    /// Multifractal detrended fluctuation analysis.
    Mfdfa {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        returns: ReturnsArgs,
        #[arg(long, allow_hyphen_values = true)]
        r_min: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        r_max: Option<f64>,
        #[arg(long)]
        r_step: Option<f64>,
        #[arg(long)]
        n_min: Option<usize>,
        #[arg(long)]
        n_max: Option<usize>,
        #[arg(long)]
        n_count: Option<usize>,
        /// Detrending polynomial order.
        #[arg(long)]
        order: Option<usize>,
        /// Scaling window `lo,hi` for the h(r) regression.
        #[arg(long, value_parser = parse_usize_pair)]
        window: Option<(usize, usize)>,
        /// Analyze a shuffled copy drawn with this seed.
        #[arg(long, value_parser = clap::value_parser!(u64).range(..=i64::MAX as u64))]
        shuffle: Option<u64>,
    },
    /// Correlation eigenvalues of three rates across time scales.
    Epps {
        #[arg(long, num_args = 3, required = true, value_names = ["A", "B", "C"])]
        triple: Vec<PathBuf>,
        #[command(flatten)]
        input: InputArgs,
        /// Orient the three pairs into a cyclic triangle first.
        #[arg(long)]
        triangle: bool,
        /// Time scales in grid steps, comma separated.
        #[arg(long, value_delimiter = ',')]
        dt: Option<Vec<usize>>,
        #[arg(long, default_value_t = 0.95)]
        fraction: f64,
    },
    /// Generate a synthetic series with known statistics.
    Synth(SynthArgs),
    /// Run everything a configuration file asks for.
    Pipeline {
        #[arg(long)]
        config: PathBuf,
    },
}

/// Column layout of raw delimited price files.
#[derive(Debug, Args, Default)]
pub struct FormatArgs {
    /// One label per input, e.g. `EUR/USD`; the file stem otherwise.
    #[arg(long = "label")]
    pub labels: Vec<String>,
    #[arg(long)]
    pub delimiter: Option<char>,
    #[arg(long)]
    pub no_header: bool,
    /// Timestamp column, by header name or zero-based index.
    #[arg(long)]
    pub time_col: Option<String>,
    #[arg(long)]
    pub price_col: Option<String>,
    #[arg(long)]
    pub gap_col: Option<String>,
    /// Timestamps are ISO-8601 rather than epoch seconds.
    #[arg(long)]
    pub iso: bool,
    /// Grid step in seconds.
    #[arg(long)]
    pub step: Option<i64>,
}

impl FormatArgs {
    fn any(&self) -> bool {
        self.delimiter.is_some()
            || self.no_header
            || self.time_col.is_some()
            || self.price_col.is_some()
            || self.gap_col.is_some()
            || self.iso
            || self.step.is_some()
    }

    fn spec(&self) -> FormatSpec {
        let d = FormatSpec::default();
        FormatSpec {
            delimiter: self.delimiter.unwrap_or(d.delimiter),
            has_header: !self.no_header,
            timestamp: self.time_col.as_deref().map(column).unwrap_or(d.timestamp),
            price: self.price_col.as_deref().map(column).unwrap_or(d.price),
            gap: self.gap_col.as_deref().map(column),
            time_format: if self.iso { TimeFormat::Iso8601 } else { TimeFormat::EpochSeconds },
            step: self.step.unwrap_or(d.step),
            label: String::new(),
        }
    }
}

fn column(s: &str) -> Column {
    s.parse().map(Column::Index).unwrap_or_else(|_| Column::Name(s.to_string()))
}

/// How the inputs are read. Canonical series files are assumed unless raw
/// layout flags are given.
#[derive(Debug, Args)]
pub struct InputArgs {
    #[command(flatten)]
    pub format: FormatArgs,
    /// Treat canonical inputs as prices or as ready-made series, overriding
    /// their metadata.
    #[arg(long, value_enum)]
    pub values: Option<ValuesArg>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum ValuesArg {
    Prices,
    Series,
}

impl InputArgs {
    fn source(&self, paths: Vec<PathBuf>) -> Source {
        Source {
            paths,
            format: self.format.any().then(|| self.format.spec()),
            labels: self.format.labels.clone(),
            values: self.values.map(|v| match v {
                ValuesArg::Prices => ValueKind::Prices,
                ValuesArg::Series => ValueKind::Series,
            }),
            generator: None,
        }
    }
}

#[derive(Debug, Args)]
pub struct ReturnsArgs {
    /// Return time scale in grid steps.
    #[arg(long)]
    pub dt: Option<usize>,
    #[arg(long)]
    pub non_overlapping: bool,
    #[arg(long, value_enum)]
    pub kind: Option<PreparedKind>,
    /// Keep returns in their original units.
    #[arg(long)]
    pub no_normalize: bool,
    /// Divide volatility by its time-of-day profile.
    #[arg(long)]
    pub detrend: bool,
}

impl ReturnsArgs {
    fn config(&self) -> Option<ReturnsConfig> {
        let given = self.dt.is_some() || self.non_overlapping || self.kind.is_some() || self.no_normalize || self.detrend;
        given.then(|| ReturnsConfig {
            dt_steps: self.dt.unwrap_or(1),
            overlap: !self.non_overlapping,
            kind: self.kind.unwrap_or(PreparedKind::Plain),
            normalize: !self.no_normalize,
            detrend_daily: self.detrend,
        })
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum SynthKind {
    IidGaussian,
    Ar1,
    BinomialCascade,
    QGaussianIid,
    LongMemoryVolatility,
    TriangleConsistentRates,
    LagCoupledPair,
    SpikedResidual,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_enum)]
    pub kind: SynthKind,
    #[arg(long, default_value_t = 0, value_parser = clap::value_parser!(u64).range(..=i64::MAX as u64))]
    pub seed: u64,
    /// Number of samples.
    #[arg(long, conflicts_with = "m", required_unless_present = "m")]
    pub length: Option<usize>,
    /// Cascade depth; the length becomes 2^m.
    #[arg(long)]
    pub m: Option<u32>,
    /// First timestamp, epoch seconds.
    #[arg(long, default_value_t = DEFAULT_START, allow_hyphen_values = true)]
    pub start: i64,
    #[arg(long, default_value_t = 60)]
    pub step: i64,

    /// Cascade weight of the left half.
    #[arg(long, help_heading = "Generator parameters")]
    pub a: Option<f64>,
    #[arg(long, value_enum, default_value = "exact", help_heading = "Generator parameters")]
    pub conservation: ConservationArg,
    #[arg(long, default_value_t = 0.3, help_heading = "Generator parameters")]
    pub weight_sigma: f64,
    #[arg(long, allow_hyphen_values = true, help_heading = "Generator parameters")]
    pub phi: Option<f64>,
    #[arg(long, help_heading = "Generator parameters")]
    pub q: Option<f64>,
    /// q-Gaussian B; 1/(3 − q) gives unit variance and is the default.
    #[arg(long, help_heading = "Generator parameters")]
    pub b: Option<f64>,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true, help_heading = "Generator parameters")]
    pub mu: f64,
    /// Autocorrelation decay exponent of the volatility.
    #[arg(long, help_heading = "Generator parameters")]
    pub exponent: Option<f64>,
    #[arg(long, default_value_t = 0.3, help_heading = "Generator parameters")]
    pub kappa: f64,
    #[arg(long, default_value_t = 1e-4, help_heading = "Generator parameters")]
    pub sigma: f64,
    #[arg(long, default_value_t = 1024, help_heading = "Generator parameters")]
    pub block: usize,
    #[arg(long, help_heading = "Generator parameters")]
    pub lag: Option<usize>,
    #[arg(long, default_value_t = 0.5, help_heading = "Generator parameters")]
    pub noise: f64,
    /// Spike probability per step.
    #[arg(long, default_value_t = 1e-3, help_heading = "Generator parameters")]
    pub rate: f64,
    #[arg(long, default_value_t = 30.0, help_heading = "Generator parameters")]
    pub scale: f64,
    #[arg(long, default_value_t = 1.5, help_heading = "Generator parameters")]
    pub tail_index: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum ConservationArg {
    Exact,
    InAverage,
}

fn required<T>(v: Option<T>, flag: &str, kind: &str) -> Result<T> {
    v.ok_or_else(|| Error::usage(format!("--{flag} is required for --kind {kind}")))
}

impl SynthArgs {
    pub fn spec(&self) -> Result<GeneratorSpec> {
        let kind = match self.kind {
            SynthKind::IidGaussian => GeneratorKind::IidGaussian,
            SynthKind::Ar1 => GeneratorKind::Ar1 { phi: required(self.phi, "phi", "ar1")? },
            SynthKind::BinomialCascade => GeneratorKind::BinomialCascade {
                a: required(self.a, "a", "binomial_cascade")?,
                conservation: match self.conservation {
                    ConservationArg::Exact => Conservation::Exact,
                    ConservationArg::InAverage => Conservation::InAverage,
                },
                weight_sigma: self.weight_sigma,
            },
            SynthKind::QGaussianIid => {
                let q = required(self.q, "q", "q_gaussian_iid")?;
                GeneratorKind::QGaussianIid { q, b: self.b.unwrap_or(1.0 / (3.0 - q)), mu: self.mu }
            }
            SynthKind::LongMemoryVolatility => GeneratorKind::LongMemoryVolatility {
                exponent: required(self.exponent, "exponent", "long_memory_volatility")?,
                kappa: self.kappa,
            },
            SynthKind::TriangleConsistentRates => {
                GeneratorKind::TriangleConsistentRates { sigma: self.sigma, block: self.block }
            }
            SynthKind::LagCoupledPair => {
                GeneratorKind::LagCoupledPair { lag: required(self.lag, "lag", "lag_coupled_pair")?, noise: self.noise }
            }
            SynthKind::SpikedResidual => {
                GeneratorKind::SpikedResidual { rate: self.rate, scale: self.scale, tail_index: self.tail_index }
            }
        };
        let length = match (self.length, self.m) {
            (Some(n), _) => n,
            (None, Some(m)) if m < usize::BITS => 1usize << m,
            (None, Some(m)) => return Err(Error::usage(format!("--m {m} is too large"))),
            (None, None) => return Err(Error::usage("--length or --m is required")),
        };
        Ok(GeneratorSpec { kind, seed: self.seed, length, start_epoch: self.start, step: self.step })
    }
}

fn parse_f64_pair(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or("expected two comma-separated numbers")?;
    let p = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("'{t}': {e}"));
    Ok((p(a)?, p(b)?))
}

fn parse_usize_pair(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s.split_once(',').ok_or("expected two comma-separated integers")?;
    let p = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("'{t}': {e}"));
    Ok((p(a)?, p(b)?))
}

/// `sun:21:00` as well as `Sun 21:00`.
fn parse_week_instant(s: &str) -> std::result::Result<WeekInstant, String> {
    let t = match s.split_once(':') {
        Some((day, rest)) if rest.contains(':') => format!("{day} {rest}"),
        _ => s.to_string(),
    };
    t.parse().map_err(|e: Error| e.to_string())
}

/// r grid from `min` to `max` in steps of `step`. Points are rounded to
/// twelve decimals so that a grid through zero contains exactly 0.
pub fn r_grid(min: f64, max: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(max > min) || !min.is_finite() || !max.is_finite() {
        return Err(Error::usage(format!("invalid r grid [{min}, {max}] step {step}")));
    }
    let n = ((max - min) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| ((min + i as f64 * step) * 1e12).round() / 1e12).collect())
}

impl Command {
    /// The configuration this invocation stands for. `pipeline` loads it
    /// from disk.
    pub fn into_config(self) -> Result<RunConfig> {
        let cfg = match self {
            Command::Ingest { inputs, format } => {
                let mut c = RunConfig::new(Source {
                    paths: inputs,
                    format: Some(format.spec()),
                    labels: format.labels.clone(),
                    ..Source::default()
                });
                c.analyses.write_series = true;
                c
            }
            Command::Returns { inputs, input, returns } => {
                let mut c = RunConfig::new(input.source(inputs));
                c.returns = Some(returns.config().unwrap_or_default());
                c.analyses.write_series = true;
                c
            }
            Command::Distfit { inputs, input, returns, range, q_bounds, q_step, max_points, min_rank } => {
                let d = FitOptions::default();
                let options = FitOptions {
                    fit_range: range.unwrap_or(d.fit_range),
                    q_bounds: q_bounds.unwrap_or(d.q_bounds),
                    q_step: q_step.unwrap_or(d.q_step),
                    max_points: max_points.unwrap_or(d.max_points),
                    min_rank: min_rank.unwrap_or(d.min_rank),
                    max_iterations: d.max_iterations,
                };
                let mut c = RunConfig::new(input.source(inputs));
                c.returns = returns.config();
                c.analyses.distfit = Some(DistfitConfig { options, normalize: true });
                c
            }
            Command::Autocorr { inputs, input, returns, max_lag, fit } => {
                let mut c = RunConfig::new(input.source(inputs));
                c.returns = returns.config();
                c.analyses.autocorr = Some(AutocorrConfig { max_lag, fit_window: fit });
                c
            }
            Command::Rmt { inputs, input, returns, week_start, week_end, modes, threshold, bins } => {
                let d = RmtConfig::default();
                let mut c = RunConfig::new(input.source(inputs));
                c.returns = returns.config();
                c.analyses.rmt = Some(RmtConfig {
                    window: WeekWindow { start: week_start.unwrap_or(d.window.start), end: week_end.unwrap_or(d.window.end) },
                    modes,
                    outlier_threshold: threshold.unwrap_or(d.outlier_threshold),
                    histogram_bins: bins,
                });
                c
            }
            Command::Mfdfa { inputs, input, returns, r_min, r_max, r_step, n_min, n_max, n_count, order, window, shuffle } => {
                let r_values = if r_min.is_some() || r_max.is_some() || r_step.is_some() {
                    Some(r_grid(r_min.unwrap_or(-4.0), r_max.unwrap_or(4.0), r_step.unwrap_or(0.4))?)
                } else {
                    None
                };
                let mut c = RunConfig::new(input.source(inputs));
                c.returns = returns.config();
                c.analyses.mfdfa = Some(MfdfaRun {
                    r_values,
                    n_min,
                    n_max,
                    n_count,
                    poly_order: order,
                    scaling_window: window,
                    shuffle_seed: shuffle,
                });
                c
            }
            Command::Epps { triple, input, triangle, dt, fraction } => {
                let mut c = RunConfig::new(input.source(triple));
                c.analyses.epps =
                    Some(EppsConfig { dt_grid: dt.unwrap_or_else(default_dt_grid), triangle, saturation_fraction: fraction });
                c
            }
            Command::Synth(s) => {
                let mut c = RunConfig::new(Source { generator: Some(s.spec()?), ..Source::default() });
                c.analyses.write_series = true;
                c
            }
            Command::Pipeline { config } => return RunConfig::load(&config),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
