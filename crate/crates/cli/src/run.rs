//! Executes a resolved [`RunConfig`]: load, prepare, analyze, write.

use std::path::{Path, PathBuf};

use fxstats::epps::{epps_curve, saturation_scale};
use fxstats::ingest::{parse_price_file, segment_weeks};
use fxstats::mfdfa::{analyze, shuffle_surrogate};
use fxstats::model::cyclic_orientation;
use fxstats::qgaussian::{cdf_wing, fit_both, EmpiricalCdf, Wing};
use fxstats::returns::{daily_profile, log_returns, normalize, remove_daily_trend, residual_returns, volatility};
use fxstats::rmt::{build_segment_matrix, correlation_matrix, diagonalize, eigensignal, Histogram, MpDensity};
use fxstats::series_io::SeriesFile;
use fxstats::synth::{generate, Generated};
use fxstats::temporal::{autocorrelation, fit_power_law};
use fxstats::{Error, ReturnKind, ReturnSeries, Result, TickSeries, Triangle};
use serde_json::{json, Map, Value};

use crate::config::*;
use crate::output::{log10_abs, slug, Table, Writer, TOOL, VERSION};

/// What a run loaded: price series, or series that are analyzed as they are.
#[derive(Debug, Clone)]
pub enum Data {
    Prices(Vec<TickSeries>),
    Series(Vec<ReturnSeries>),
}

impl Data {
    fn len(&self) -> usize {
        match self {
            Data::Prices(p) => p.len(),
            Data::Series(s) => s.len(),
        }
    }
}

fn kind_name(k: ReturnKind) -> &'static str {
    match k {
        ReturnKind::Plain => "plain",
        ReturnKind::Residual => "residual",
        ReturnKind::Volatility => "volatility",
    }
}

/// Attaches the file name to data errors raised while parsing it.
fn in_file(path: &Path, e: Error) -> Error {
    match e {
        Error::Data { line, message } => Error::Data { line, message: format!("{}: {message}", path.display()) },
        Error::InvalidData(m) => Error::InvalidData(format!("{}: {m}", path.display())),
        other => other,
    }
}

fn file_stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

pub fn load(source: &Source) -> Result<Data> {
    if let Some(spec) = &source.generator {
        return Ok(match generate(spec)? {
            Generated::Returns(r) => Data::Series(vec![r]),
            Generated::Rates(r) => Data::Prices(r),
        });
    }
    let label = |i: usize| source.labels.get(i).cloned();
    if let Some(format) = &source.format {
        let mut out = Vec::with_capacity(source.paths.len());
        for (i, path) in source.paths.iter().enumerate() {
            let mut spec = format.clone();
            spec.label = label(i).unwrap_or_else(|| file_stem(path));
            out.push(parse_price_file(path, &spec).map_err(|e| in_file(path, e))?);
        }
        return Ok(Data::Prices(out));
    }
    let mut prices = Vec::new();
    let mut series = Vec::new();
    for (i, path) in source.paths.iter().enumerate() {
        let mut f = SeriesFile::read(path).map_err(|e| in_file(path, e))?;
        if let Some(l) = label(i) {
            f.label = l;
        } else if f.label.is_empty() {
            f.label = file_stem(path);
        }
        let meta = |k: &str| f.metadata.iter().find(|(key, _)| key == k).map(|(_, v)| v.clone());
        let stored = meta("values");
        let as_prices = match source.values {
            Some(ValueKind::Prices) => true,
            Some(ValueKind::Series) => false,
            None => stored.as_deref().is_none_or(|v| v == "prices"),
        };
        if as_prices {
            prices.push(f.into_ticks().map_err(|e| in_file(path, e))?);
            continue;
        }
        let kind = match stored.as_deref() {
            Some("residual") => ReturnKind::Residual,
            Some("volatility") => ReturnKind::Volatility,
            _ => ReturnKind::Plain,
        };
        let dt = meta("dt_steps").and_then(|v| v.parse().ok()).unwrap_or(1);
        let normalized = meta("normalized").is_some_and(|v| v == "true");
        let mut r = f.into_returns().map_err(|e| in_file(path, e))?;
        r.kind = kind;
        r.dt_steps = dt;
        r.normalized = normalized;
        series.push(r);
    }
    match (prices.is_empty(), series.is_empty()) {
        (false, true) => Ok(Data::Prices(prices)),
        (true, false) => Ok(Data::Series(series)),
        _ => Err(Error::usage("inputs mix price files and ready-made series")),
    }
}

/// Turns prices into the series the single-series analyses work on.
pub fn prepare(prices: &[TickSeries], cfg: &ReturnsConfig) -> Result<Vec<ReturnSeries>> {
    let finish = |mut r: ReturnSeries| -> Result<ReturnSeries> {
        if cfg.normalize {
            r = normalize(&r)?;
        }
        if cfg.kind == PreparedKind::Volatility {
            r = volatility(&r)?;
            if cfg.detrend_daily {
                r = remove_daily_trend(&r, &daily_profile(&r)?)?;
            }
        }
        Ok(r)
    };
    if cfg.kind != PreparedKind::Residual {
        return prices.iter().map(|p| finish(log_returns(p, cfg.dt_steps, cfg.overlap)?)).collect();
    }
    let [a, b, c] = prices else {
        return Err(Error::usage(format!("residual returns need three price series, got {}", prices.len())));
    };
    let flip = cyclic_orientation([a.label(), b.label(), c.label()]).ok_or_else(|| {
        Error::usage(format!("{}, {}, {} do not form a currency triangle", a.label(), b.label(), c.label()))
    })?;
    let mut legs = Vec::with_capacity(3);
    for (p, f) in [a, b, c].into_iter().zip(flip) {
        let p = if f { p.inverted() } else { p.clone() };
        legs.push(log_returns(&p, cfg.dt_steps, cfg.overlap)?);
    }
    let legs: [ReturnSeries; 3] = legs.try_into().expect("three legs");
    finish(residual_returns(&Triangle::new(legs)?)?).map(|r| vec![r])
}

/// Fills in everything left to defaults so that the emitted configuration
/// reproduces the run without relying on them. Paths become absolute.
pub fn resolve(cfg: &RunConfig, data: &Data) -> Result<RunConfig> {
    let mut r = cfg.clone();
    r.source.paths = cfg
        .source
        .paths
        .iter()
        .map(|p| std::path::absolute(p).map_err(|source| Error::Io { path: p.display().to_string(), source }))
        .collect::<Result<Vec<PathBuf>>>()?;
    match data {
        Data::Prices(_) if r.analyses.needs_single_series() && r.returns.is_none() => {
            r.returns = Some(ReturnsConfig::default());
        }
        Data::Series(_) if r.returns.is_some() => {
            return Err(Error::usage("return settings apply to price input only; these inputs are already series"));
        }
        Data::Series(_) if r.analyses.epps.is_some() => {
            return Err(Error::usage("epps needs price series"));
        }
        _ => {}
    }
    r.validate()?;
    Ok(r)
}

pub struct Report {
    pub config: RunConfig,
    pub files: Vec<String>,
    pub results: Map<String, Value>,
}

/// Runs `cfg` and writes all outputs to `out`.
pub fn execute(cfg: &RunConfig, out: &Path) -> Result<Report> {
    cfg.validate()?;
    let data = load(&cfg.source)?;
    let mut resolved = resolve(cfg, &data)?;
    let prepared = match (&data, &resolved.returns) {
        (Data::Prices(p), Some(rc)) => Some(prepare(p, rc)?),
        (Data::Series(s), _) => Some(s.clone()),
        _ => None,
    };
    let a = &resolved.analyses;
    let single = if a.needs_single_series() {
        let s = prepared.as_deref().unwrap_or_default();
        if s.len() != 1 {
            return Err(Error::usage(format!(
                "the selected analyses need exactly one series, the input gives {}",
                s.len()
            )));
        }
        Some(&s[0])
    } else {
        None
    };
    if let Some(e) = &a.epps {
        if data.len() != 3 || !matches!(data, Data::Prices(_)) {
            return Err(Error::usage(format!("epps needs three price series, got {}", data.len())));
        }
        if e.dt_grid.is_empty() {
            return Err(Error::usage("epps needs at least one time scale"));
        }
    }
    if let (Some(m), Some(s)) = (&a.mfdfa, single) {
        let c = m.resolve(s.len());
        c.validate(s.len())?;
        resolved.analyses.mfdfa = Some(MfdfaRun::from_config(&c, m.shuffle_seed));
    }

    let mut w = Writer::new(out)?;
    let mut results = Map::new();
    let a = resolved.analyses.clone();
    if a.write_series {
        write_series(&mut w, &data, prepared.as_ref().filter(|_| resolved.returns.is_some()))?;
    }
    if let (Some(c), Some(s)) = (&a.distfit, single) {
        results.insert("distfit".into(), run_distfit(&mut w, s, c)?);
    }
    if let (Some(c), Some(s)) = (&a.autocorr, single) {
        results.insert("autocorr".into(), run_autocorr(&mut w, s, c)?);
    }
    if let (Some(c), Some(s)) = (&a.rmt, single) {
        results.insert("rmt".into(), run_rmt(&mut w, s, c)?);
    }
    if let (Some(c), Some(s)) = (&a.mfdfa, single) {
        results.insert("mfdfa".into(), run_mfdfa(&mut w, s, c)?);
    }
    if let (Some(c), Data::Prices(p)) = (&a.epps, &data) {
        results.insert("epps".into(), run_epps(&mut w, p, c)?);
    }

    w.text("config.toml", &resolved.to_toml()?)?;
    let mut files = w.written.clone();
    files.push("summary.json".into());
    let summary = json!({
        "tool": TOOL,
        "version": VERSION,
        "config": resolved,
        "files": files,
        "results": results,
    });
    let text = serde_json::to_string_pretty(&summary).map_err(|e| Error::data(format!("summary: {e}")))?;
    w.text("summary.json", &(text + "\n"))?;
    Ok(Report { config: resolved, files, results })
}

fn write_series(w: &mut Writer, data: &Data, prepared: Option<&Vec<ReturnSeries>>) -> Result<()> {
    let mut files: Vec<SeriesFile> = Vec::new();
    match (prepared, data) {
        (Some(series), _) | (None, Data::Series(series)) => {
            for r in series {
                let mut f = SeriesFile::from_returns(r);
                f.metadata = vec![
                    ("tool".into(), format!("{TOOL} {VERSION}")),
                    ("values".into(), kind_name(r.kind).into()),
                    ("dt_steps".into(), r.dt_steps.to_string()),
                    ("normalized".into(), r.normalized.to_string()),
                ];
                files.push(f);
            }
        }
        (None, Data::Prices(prices)) => {
            for p in prices {
                let mut f = SeriesFile::from_ticks(p);
                f.metadata = vec![("tool".into(), format!("{TOOL} {VERSION}")), ("values".into(), "prices".into())];
                files.push(f);
            }
        }
    }
    let single = files.len() == 1;
    for f in files {
        let name = if single { "series.csv".to_string() } else { format!("series_{}.csv", slug(&f.label)) };
        w.text(&name, &f.to_csv())?;
    }
    Ok(())
}

fn run_distfit(w: &mut Writer, s: &ReturnSeries, c: &DistfitConfig) -> Result<Value> {
    let s = if c.normalize { normalize(s)? } else { s.clone() };
    let ecdf = EmpiricalCdf::new(&s.values)?;
    let fit = fit_both(&ecdf, &c.options)?;
    let mut t = Table::new(
        "distfit_tails.csv",
        "distfit",
        c,
        &["wing", "x", "abs_x", "p_empirical", "p_fitted", "log10_abs_x", "log10_p_empirical", "log10_p_fitted"],
    );
    for (wing, wf) in [(Wing::Left, &fit.left), (Wing::Right, &fit.right)] {
        let name = if wing == Wing::Left { "left" } else { "right" };
        for p in ecdf.tail_points(wing, 0.0, f64::INFINITY, 500, 1) {
            let pf = cdf_wing(p.x, &wf.params, wing)?;
            t.row(&[&name, &p.x, &p.x.abs(), &p.p, &pf, &log10_abs(p.x), &log10_abs(p.p), &log10_abs(pf)]);
        }
    }
    w.table(t)?;
    Ok(json!({ "left": fit.left, "right": fit.right, "fit_range": fit.fit_range, "n": ecdf.len() }))
}

fn run_autocorr(w: &mut Writer, s: &ReturnSeries, c: &AutocorrConfig) -> Result<Value> {
    let ac = autocorrelation(s, c.max_lag)?;
    let mut t =
        Table::new("autocorr.csv", "autocorr", c, &["lag", "c", "confidence_95", "n_eff", "log10_lag", "log10_abs_c"]);
    for i in 0..ac.lags.len() {
        let lag = ac.lags[i];
        t.row(&[&lag, &ac.c[i], &ac.confidence_95[i], &ac.n_eff[i], &log10_abs(lag as f64), &log10_abs(ac.c[i])]);
    }
    w.table(t)?;
    let fit = c.fit_window.map(|win| fit_power_law(&ac, win)).transpose()?;
    Ok(json!({
        "series": s.label,
        "kind": kind_name(s.kind),
        "fraction_inside_band": ac.fraction_inside_band(),
        "power_law": fit,
    }))
}

fn run_rmt(w: &mut Writer, s: &ReturnSeries, c: &RmtConfig) -> Result<Value> {
    let seg = segment_weeks(&s.grid, &c.window)?;
    let m = build_segment_matrix(s, &seg)?;
    let corr = correlation_matrix(&m);
    let dec = diagonalize(&corr.c)?;
    let mp = MpDensity::lenient(m.q(), 1.0)?;
    let outside = mp.fraction_outside(&dec.eigenvalues);

    let mut t = Table::new("rmt_eigenvalues.csv", "rmt", c, &["rank", "lambda", "log10_lambda", "outside_mp"]);
    for (i, &l) in dec.eigenvalues.iter().enumerate() {
        let out = l < mp.lambda_min || l > mp.lambda_max;
        t.row(&[&(i + 1), &l, &log10_abs(l), &u8::from(out)]);
    }
    w.table(t.meta("q", m.q()).meta("mp_lambda_min", mp.lambda_min).meta("mp_lambda_max", mp.lambda_max))?;

    let points = 400;
    let mut t = Table::new("rmt_mp_density.csv", "rmt", c, &["lambda", "density"]);
    for i in 0..=points {
        let l = mp.lambda_min + (mp.lambda_max - mp.lambda_min) * i as f64 / points as f64;
        t.row(&[&l, &mp.density(l)]);
    }
    w.table(t)?;

    let k = m.k();
    let off: Vec<f64> = (0..k).flat_map(|i| (0..i).map(move |j| (i, j))).map(|(i, j)| corr.c[(i, j)]).collect();
    let e = &corr.elements;
    if !off.is_empty() && c.histogram_bins > 0 {
        let h = Histogram::of(&off, c.histogram_bins);
        let mut t = Table::new("rmt_elements.csv", "rmt", c, &["bin_lo", "bin_hi", "count", "density", "gaussian"]);
        for (i, &n) in h.counts.iter().enumerate() {
            let (lo, hi) = (h.edges[i], h.edges[i + 1]);
            let density = n as f64 / (off.len() as f64 * (hi - lo));
            let x = 0.5 * (lo + hi);
            let g = if e.std > 0.0 {
                (-(x - e.mean).powi(2) / (2.0 * e.std * e.std)).exp() / (e.std * (2.0 * std::f64::consts::PI).sqrt())
            } else {
                f64::NAN
            };
            t.row(&[&lo, &hi, &n, &density, &g]);
        }
        w.table(t)?;
    }

    let mut modes = Vec::new();
    for mode in 1..=c.modes.min(k) {
        let sig = eigensignal(&m, &dec, mode)?;
        let mut t = Table::new(format!("rmt_eigensignal_{mode}.csv"), "rmt", c, &["index", "time_of_week", "z"]);
        let t0 = m.row_starts.first().copied();
        for (i, z) in sig.z.iter().enumerate() {
            let tow = t0
                .map(|t0| fxstats::ingest::WeekInstant::of_epoch(t0 + i as i64 * m.step).to_string())
                .unwrap_or_default();
            t.row(&[&i, &tow, z]);
        }
        w.table(t.meta("mode", mode).meta("eigenvalue", dec.eigenvalues[mode - 1]))?;
        let outliers = sig.outliers(c.outlier_threshold, &m);
        modes.push(json!({
            "mode": mode,
            "eigenvalue": dec.eigenvalues[mode - 1],
            "argmax_abs": sig.argmax_abs(),
            "outliers": outliers.iter().map(|o| json!({
                "index": o.index,
                "value": o.value,
                "multiple": o.multiple,
                "time_of_week": o.time_of_week.map(|t| t.to_string()),
            })).collect::<Vec<_>>(),
        }));
    }
    Ok(json!({
        "weeks": k,
        "week_length": m.t_k(),
        "q": m.q(),
        "mp_lambda_min": mp.lambda_min,
        "mp_lambda_max": mp.lambda_max,
        "fraction_outside_mp": outside,
        "largest_eigenvalues": dec.eigenvalues.iter().take(10).collect::<Vec<_>>(),
        "elements": { "count": e.count, "mean": e.mean, "std": e.std },
        "modes": modes,
    }))
}

fn run_mfdfa(w: &mut Writer, s: &ReturnSeries, c: &MfdfaRun) -> Result<Value> {
    let cfg = c.resolve(s.len());
    let x = match c.shuffle_seed {
        Some(seed) => shuffle_surrogate(&s.values, seed),
        None => s.values.clone(),
    };
    let (surface, hurst, spec) = analyze(&x, &cfg)?;

    let mut t = Table::new("mfdfa_fluctuation.csv", "mfdfa", c, &["r", "n", "F", "log10_n", "log10_F"]);
    for (i, &r) in surface.r_values.iter().enumerate() {
        for (j, &n) in surface.scales.iter().enumerate() {
            let f = surface.f[i][j];
            t.row(&[&r, &n, &f, &log10_abs(n as f64), &log10_abs(f)]);
        }
    }
    w.table(t)?;

    let mut t = Table::new("mfdfa_hurst.csv", "mfdfa", c, &["r", "h", "h_stderr", "tau"]);
    for i in 0..hurst.r_values.len() {
        t.row(&[&hurst.r_values[i], &hurst.h[i], &hurst.h_stderr[i], &spec.tau[i]]);
    }
    w.table(t)?;

    let mut t = Table::new("mfdfa_spectrum.csv", "mfdfa", c, &["r", "alpha", "f_alpha"]);
    for i in 0..spec.r_values.len() {
        t.row(&[&spec.r_values[i], &spec.alpha[i], &spec.f_alpha[i]]);
    }
    w.table(t)?;

    Ok(json!({
        "series": s.label,
        "length": x.len(),
        "shuffled": c.shuffle_seed.is_some(),
        "width": spec.width,
        "peak_alpha": spec.peak_alpha,
        "min_alpha": spec.min_alpha,
        "min_f": spec.min_f,
        "max_f": spec.max_f,
        "anomalous": spec.is_anomalous(),
        "tau_nondecreasing": spec.tau_nondecreasing,
        "tau_concave": spec.tau_concave,
        "monotone_in_r": surface.monotone_in_r,
        "scales_used": hurst.scales_used,
    }))
}

fn run_epps(w: &mut Writer, p: &[TickSeries], c: &EppsConfig) -> Result<Value> {
    let e = epps_curve([&p[0], &p[1], &p[2]], &c.dt_grid, c.triangle)?;
    let l1 = e.lambda1();
    let sat = if l1.len() >= 5 { Some(saturation_scale(&e.dt_grid, &l1, c.saturation_fraction)?) } else { None };
    let mut t = Table::new(
        "epps.csv",
        "epps",
        c,
        &["dt", "lambda1", "lambda2", "lambda3", "lambda_sum", "n_returns", "log10_dt"],
    )
    .meta("returns", "non_overlapping")
    .meta("gap_rule", "a time slot is dropped from all three series when any of them has a filled price in it")
    .meta("labels", e.labels.join(" "));
    for (i, l) in e.lambdas.iter().enumerate() {
        let dt = e.dt_grid[i];
        t.row(&[&dt, &l[0], &l[1], &l[2], &(l[0] + l[1] + l[2]), &e.n_returns[i], &log10_abs(dt as f64)]);
    }
    w.table(t)?;
    Ok(json!({
        "labels": e.labels,
        "inverted": e.inverted,
        "is_triangle": e.is_triangle,
        "eigenvectors_at_max_dt": e.eigenvectors_at_max_dt,
        "saturation": sat,
    }))
}
