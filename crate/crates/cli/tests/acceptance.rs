//! Acceptance suite: one PASS/FAIL line per criterion, with the tolerances
//! and runtime budgets pinned below. Exits non-zero when a criterion fails,
//! apart from the checks listed in `UNATTAINABLE`.

use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use fxstats::epps::{default_dt_grid, epps_curve, saturation_scale};
use fxstats::ingest::WeekWindow;
use fxstats::mfdfa::*;
use fxstats::qgaussian::*;
use fxstats::quadrature::{integrate, integrate_real_line};
use fxstats::returns::{log_returns, residual_returns};
use fxstats::rmt::*;
use fxstats::synth::*;
use fxstats::temporal::{autocorrelation, autocorrelation_of, fit_power_law};
use fxstats::{TickSeries, Triangle};
use fxstats_cli::config::*;
use nalgebra::{DMatrix, DVector};

/// Checks that cannot pass together with the rest of their criterion.
///
/// For the a = 0.6 cascade the analytic α(r) = τ'(r) spans only
/// α(4) ≈ 0.834 to α(−4) ≈ 1.225 on |r| ≤ 4, a width of 0.392; the
/// finite-difference spectrum of the analytic h on the 0.4 grid has width
/// 0.378. A measured width above 0.4 would need h to miss the analytic
/// curve, which the same criterion forbids.
const UNATTAINABLE: &[(u32, &str)] = &[(4, "width")];

struct Check {
    key: &'static str,
    ok: bool,
    detail: String,
}

fn check(key: &'static str, ok: bool, detail: impl Into<String>) -> Check {
    Check { key, ok, detail: detail.into() }
}

struct Criterion {
    id: u32,
    title: &'static str,
    budget: Duration,
    run: fn() -> Vec<Check>,
}

fn max_by<T>(it: impl IntoIterator<Item = T>, f: impl Fn(T) -> f64) -> f64 {
    it.into_iter().map(f).fold(0.0, f64::max)
}

fn returns_of(kind: GeneratorKind, seed: u64, n: usize) -> Vec<f64> {
    generate(&GeneratorSpec::new(kind, seed, n)).unwrap().returns().unwrap().values
}

fn rates_of(kind: GeneratorKind, seed: u64, n: usize) -> Vec<TickSeries> {
    generate(&GeneratorSpec::new(kind, seed, n)).unwrap().rates().unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn c1_qgaussian_machinery() -> Vec<Check> {
    let mut err: f64 = 0.0;
    for z in [-1e6f64, -250.0, -7.5, -1.0, -0.95, -0.3, 0.2, 0.5, 0.9, 0.97] {
        err = err.max(rel(hyp2f1(1.0, 1.0, 2.0, z).unwrap(), -(1.0 - z).ln() / z));
        err = err.max(rel(hyp2f1(0.5, 2.0, 2.0, z).unwrap(), (1.0 - z).powf(-0.5)));
    }
    for x in [0.1f64, 0.7, 1.0, 3.0, 40.0, 1e4] {
        err = err.max(rel(hyp2f1(0.5, 1.0, 1.5, -x * x).unwrap(), x.atan() / x));
    }
    for x in [0.05f64, 0.5, 0.9, 0.99] {
        err = err.max(rel(hyp2f1(0.5, 0.5, 1.5, x * x).unwrap(), x.asin() / x));
    }
    let mass = max_by([1.2, 1.4, 1.6], |q| {
        let p = QGaussianParams::new(q, 1.0, 0.0).unwrap();
        (integrate_real_line(|x| pdf(x, &p).unwrap(), p.mu, p.sigma(), 1e-12).0 - 1.0).abs()
    });
    let p = QGaussianParams::new(1.5, 1.0, 0.0).unwrap();
    let tail = |x: f64| cdf_wing(x, &p, Wing::Right).unwrap().ln();
    let slope = (tail(1e4) - tail(1e3)) / 10f64.ln();
    vec![
        check("2f1", err <= 1e-10, format!("2F1 max rel err {err:.1e} (<= 1e-10)")),
        check("pdf", mass <= 1e-8, format!("pdf mass err {mass:.1e} (<= 1e-8)")),
        check("slope", (slope + 3.0).abs() <= 0.01, format!("q=1.5 tail slope {slope:.4} (-3 ± 0.01)")),
    ]
}

fn c2_fit_recovery() -> Vec<Check> {
    [1.0, 1.3, 1.5]
        .into_iter()
        .enumerate()
        .map(|(i, q)| {
            let kind = GeneratorKind::QGaussianIid { q, b: 1.0 / (3.0 - q), mu: 0.0 };
            let x = returns_of(kind, 1 + i as u64, 1_000_000);
            let f = fit_both(&EmpiricalCdf::new(&x).unwrap(), &FitOptions::default()).unwrap();
            let (l, r) = (f.left.params.q, f.right.params.q);
            let ok = (l - q).abs() <= 0.05 && (r - q).abs() <= 0.05;
            check("q", ok, format!("q={q}: left {l:.3}, right {r:.3} (± 0.05)"))
        })
        .collect()
}

fn c3_monofractal() -> Vec<Check> {
    let x = returns_of(GeneratorKind::IidGaussian, 1, 1 << 17);
    let (_, h, spec) = analyze(&x, &MfdfaConfig::for_length(x.len())).unwrap();
    let dev = max_by(&h.h, |h| (h - 0.5).abs());
    vec![
        check("h", dev <= 0.03, format!("max |h - 0.5| {dev:.4} (<= 0.03)")),
        check("width", spec.width < 0.1, format!("width {:.4} (< 0.1)", spec.width)),
    ]
}

fn cascade_values(seed: u64) -> Vec<f64> {
    let kind = GeneratorKind::BinomialCascade { a: 0.6, conservation: Conservation::Exact, weight_sigma: 0.3 };
    returns_of(kind, seed, 1 << 16)
}

/// Scales 2^lo ..= 2^hi, regression over all of them.
fn dyadic(lo: u32, hi: u32) -> MfdfaConfig {
    MfdfaConfig {
        r_values: default_r_values(),
        n_min: 1 << lo,
        n_max: 1 << hi,
        n_count: (hi - lo + 1) as usize,
        poly_order: 2,
        scaling_window: (1 << lo, 1 << hi),
    }
}

fn cascade_h(a: f64, r: f64) -> f64 {
    let b = 1.0 - a;
    if r == 0.0 {
        -(a.log2() + b.log2()) / 2.0
    } else {
        (1.0 - (a.powf(r) + b.powf(r)).log2()) / r
    }
}

fn c4_multifractal() -> Vec<Check> {
    let (_, h, spec) = analyze(&cascade_values(1), &dyadic(4, 14)).unwrap();
    let dev = max_by(h.r_values.iter().zip(&h.h), |(&r, &h)| (h - cascade_h(0.6, r)).abs());
    vec![
        check("h", dev <= 0.05, format!("max |h - analytic| {dev:.4} (<= 0.05)")),
        check("width", spec.width > 0.4, format!("width {:.4} (> 0.4)", spec.width)),
    ]
}

fn c5_anomalous() -> Vec<Check> {
    let kind = GeneratorKind::SpikedResidual { rate: 1e-3, scale: 30.0, tail_index: 1.5 };
    let x = returns_of(kind, 1, 1 << 17);
    let (_, h, spec) = analyze(&x, &MfdfaConfig::for_length(x.len())).unwrap();
    let h_top = *h.h.last().unwrap();
    vec![
        check("h", h_top < 0.0, format!("h(4) {h_top:.3} (< 0)")),
        check("f", spec.min_f < 0.0, format!("min f {:.3} (< 0)", spec.min_f)),
        check("alpha", spec.min_alpha < 0.0, format!("min alpha {:.3} (< 0)", spec.min_alpha)),
    ]
}

fn c6_shuffle() -> Vec<Check> {
    let x = shuffle_surrogate(&cascade_values(1), 1);
    let (_, _, spec) = analyze(&x, &dyadic(7, 13)).unwrap();
    vec![
        check("width", spec.width < 0.08, format!("width {:.4} (< 0.08)", spec.width)),
        check("peak", (spec.peak_alpha - 0.5).abs() <= 0.05, format!("peak alpha {:.4} (0.5 ± 0.05)", spec.peak_alpha)),
    ]
}

fn noise_rows(seed: u64) -> Vec<Vec<f64>> {
    (0..169u64).map(|i| returns_of(GeneratorKind::IidGaussian, seed * 10_000 + i, 7260)).collect()
}

fn spectrum(rows: &[Vec<f64>]) -> (SegmentMatrix, EigenDecomposition) {
    let m = SegmentMatrix::from_rows(rows, 60).unwrap();
    let d = diagonalize(&correlation_matrix(&m).c).unwrap();
    (m, d)
}

fn c7_rmt() -> Vec<Check> {
    let (m, d) = spectrum(&noise_rows(1));
    let mp = MpDensity::new(m.q(), 1.0).unwrap();
    let outside = mp.fraction_outside(&d.eigenvalues);
    // λ = λ_min + Δ(1 − cos θ)/2 removes the square-root edges
    let w = mp.lambda_max - mp.lambda_min;
    let g = |th: f64| {
        let lam = mp.lambda_min + 0.5 * w * (1.0 - th.cos());
        let s = 0.5 * w * th.sin();
        mp.q / (2.0 * std::f64::consts::PI) * s * s / lam
    };
    let mass = integrate(g, 0.0, std::f64::consts::PI, 1e-12).0;
    let found = (1..=10u64)
        .filter(|&seed| {
            let mut rows = noise_rows(100 + seed);
            let offset = 1000 + 37 * seed as usize;
            for r in &mut rows {
                r[offset] += 10.0;
            }
            let (m, d) = spectrum(&rows);
            eigensignal(&m, &d, 1).unwrap().argmax_abs() == offset
        })
        .count();
    vec![
        check("mp", outside <= 0.05, format!("outside MP {:.1}% (<= 5%)", 100.0 * outside)),
        check("mass", (mass - 1.0).abs() <= 1e-6, format!("MP mass {mass:.9} (1 ± 1e-6)")),
        check("spike", found == 10, format!("spike found {found}/10")),
    ]
}

fn c8_triangle() -> Vec<Check> {
    let r = rates_of(GeneratorKind::TriangleConsistentRates { sigma: 1e-4, block: 1024 }, 7, 61_440);
    let grid = default_dt_grid();
    let residual = max_by(&grid, |&dt| {
        let legs = [0, 1, 2].map(|i| log_returns(&r[i], dt, true).unwrap());
        let g = residual_returns(&Triangle::new(legs).unwrap()).unwrap();
        max_by(&g.values, |v| v.abs())
    });
    let e = epps_curve([&r[0], &r[1], &r[2]], &grid, true).unwrap();
    let l3 = max_by(&e.lambdas, |l| l[2].abs());
    let sum = max_by(&e.lambdas, |l| (l[0] + l[1] - 3.0).abs());
    let v3 = e.eigenvectors_at_max_dt[2];
    let sign = v3[0].signum();
    let vdev = max_by(v3, |c| (sign * c - 1.0 / 3f64.sqrt()).abs());
    vec![
        check("residual", residual < 1e-12, format!("max |G| {residual:.1e} (< 1e-12)")),
        check("l3", l3 <= 1e-10, format!("max |λ3| {l3:.1e} (<= 1e-10)")),
        check("sum", sum <= 1e-8, format!("max |λ1+λ2-3| {sum:.1e} (<= 1e-8)")),
        check("v3", vdev <= 1e-6, format!("v3 deviation {vdev:.1e} (<= 1e-6)")),
    ]
}

fn c9_epps_shape() -> Vec<Check> {
    [8usize, 32]
        .into_iter()
        .map(|lag| {
            let r = rates_of(GeneratorKind::LagCoupledPair { lag, noise: 0.5 }, 1, 1 << 21);
            let e = epps_curve([&r[0], &r[1], &r[2]], &default_dt_grid(), false).unwrap();
            let l1 = e.lambda1();
            let s = saturation_scale(&e.dt_grid, &l1, 0.95).unwrap();
            let Some(dt) = s.dt else {
                return check("shape", false, format!("L={lag}: not saturated"));
            };
            let i = e.dt_grid.iter().position(|&d| d == dt).unwrap();
            let rising = l1[..=i].windows(2).all(|w| w[1] > w[0]);
            let last = *l1.last().unwrap();
            let flat = l1[i..].iter().all(|&v| v >= 0.95 * last);
            let ok = rising && flat && (lag..=4 * lag).contains(&dt);
            check("shape", ok, format!("L={lag}: saturation {dt} in [{lag}, {}], rising {rising}, flat {flat}", 4 * lag))
        })
        .collect()
}

fn c10_autocorrelation() -> Vec<Check> {
    let x = returns_of(GeneratorKind::Ar1 { phi: 0.5 }, 6, 1_000_000);
    let ac = autocorrelation_of(&x, 5).unwrap();
    let dev = max_by(ac.c.iter().enumerate(), |(t, c)| (c - 0.5f64.powi(t as i32)).abs());
    let kind = GeneratorKind::LongMemoryVolatility { exponent: 0.4, kappa: 0.3 };
    let v = generate(&GeneratorSpec::new(kind, 1, 1 << 20)).unwrap().returns().unwrap();
    let fit = fit_power_law(&autocorrelation(&v, 1000).unwrap(), (5, 200)).unwrap();
    vec![
        check("ar1", dev <= 0.02, format!("AR(1) max |c - 0.5^τ| {dev:.4} (<= 0.02)")),
        check("decay", (fit.exponent - 0.4).abs() <= 0.05, format!("decay exponent {:.4} (0.4 ± 0.05)", fit.exponent)),
    ]
}

fn naive_autocorrelation(x: &[f64], max_lag: usize) -> Vec<f64> {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let s = (x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n).sqrt();
    let z: Vec<f64> = x.iter().map(|v| (v - m) / s).collect();
    (0..=max_lag).map(|t| (0..z.len() - t).map(|i| z[i] * z[i + t]).sum::<f64>() / (z.len() - t) as f64).collect()
}

/// F_r(n) from scratch: raw-index Vandermonde least squares per segment.
fn naive_fluctuation(x: &[f64], n: usize, order: usize, r: f64) -> f64 {
    let m = x.iter().sum::<f64>() / x.len() as f64;
    let y: Vec<f64> = x
        .iter()
        .scan(0.0, |acc, v| {
            *acc += v - m;
            Some(*acc)
        })
        .collect();
    let t = y.len();
    let segs = t / n;
    let v = DMatrix::from_fn(n, order + 1, |i, d| (i as f64).powi(d as i32));
    let qr = v.clone().qr();
    let (qm, rm) = (qr.q(), qr.r());
    let vars: Vec<f64> = (0..segs)
        .map(|k| k * n)
        .chain((0..segs).map(|k| t - (k + 1) * n))
        .map(|start| {
            let seg = DVector::from_column_slice(&y[start..start + n]);
            let coef = rm.solve_upper_triangular(&(qm.transpose() * &seg)).unwrap();
            (&seg - &v * coef).norm_squared() / n as f64
        })
        .collect();
    let k = vars.len() as f64;
    if r == 0.0 {
        (vars.iter().map(|v| v.ln()).sum::<f64>() / (2.0 * k)).exp()
    } else {
        (vars.iter().map(|v| v.powf(r / 2.0)).sum::<f64>() / k).powf(1.0 / r)
    }
}

fn c11_brute_force() -> Vec<Check> {
    let mut ac_err: f64 = 0.0;
    for (seed, kind) in [(1, GeneratorKind::IidGaussian), (2, GeneratorKind::Ar1 { phi: 0.7 })] {
        let x = returns_of(kind, seed, 4096);
        let got = autocorrelation_of(&x, 300).unwrap().c;
        ac_err = ac_err.max(max_by(got.iter().zip(naive_autocorrelation(&x, 300)), |(a, b)| (a - b).abs()));
    }
    let x = returns_of(GeneratorKind::IidGaussian, 11, 4096);
    let s = fluctuation_surface(&x, &MfdfaConfig { n_count: 10, ..MfdfaConfig::for_length(4096) }).unwrap();
    let mut f_err: f64 = 0.0;
    for (i, &r) in s.r_values.iter().enumerate() {
        for (j, &n) in s.scales.iter().enumerate() {
            f_err = f_err.max(rel(s.f[i][j], naive_fluctuation(&x, n, 2, r)));
        }
    }
    vec![
        check("autocorr", ac_err <= 1e-10, format!("autocorrelation max err {ac_err:.1e} (<= 1e-10)")),
        check("mfdfa", f_err <= 1e-10, format!("F_r(n) max rel err {f_err:.1e} (<= 1e-10)")),
    ]
}

fn run_cli(args: &[&str]) -> i32 {
    fxstats_cli::main_with(std::iter::once("fxstats").chain(args.iter().copied()))
}

/// Runs `cfg`, reruns the emitted config.toml elsewhere and compares every
/// output file byte for byte.
fn rerun_identical(dir: &Path, name: &str, cfg: &RunConfig) -> (bool, usize) {
    let first = dir.join(format!("{name}-1"));
    let second = dir.join(format!("{name}-2"));
    let input = dir.join(format!("{name}.toml"));
    fs::write(&input, cfg.to_toml().unwrap()).unwrap();
    let s = |p: &Path| p.to_str().unwrap().to_string();
    if run_cli(&["pipeline", "--config", &s(&input), "-o", &s(&first)]) != 0 {
        return (false, 0);
    }
    if run_cli(&["pipeline", "--config", &s(&first.join("config.toml")), "-o", &s(&second)]) != 0 {
        return (false, 0);
    }
    let mut names: Vec<_> = fs::read_dir(&first).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    let same = names.iter().all(|n| fs::read(first.join(n)).ok() == fs::read(second.join(n)).ok());
    (same, names.len())
}

fn c12_determinism() -> Vec<Check> {
    let dir = tempfile::tempdir().unwrap();
    let generated = |kind, seed, length| Source {
        generator: Some(GeneratorSpec::new(kind, seed, length)),
        ..Source::default()
    };

    let mut series = RunConfig::new(generated(GeneratorKind::LongMemoryVolatility { exponent: 0.4, kappa: 0.3 }, 4, 60_000));
    series.analyses = Analyses {
        write_series: true,
        distfit: Some(DistfitConfig::default()),
        autocorr: Some(AutocorrConfig { max_lag: 500, fit_window: Some((5, 200)) }),
        rmt: Some(RmtConfig { window: WeekWindow::default(), modes: 2, outlier_threshold: 6.0, histogram_bins: 40 }),
        mfdfa: Some(MfdfaRun::default()),
        epps: None,
    };

    let mut rates = RunConfig::new(generated(GeneratorKind::LagCoupledPair { lag: 4, noise: 0.5 }, 5, 200_000));
    rates.analyses.write_series = true;
    rates.analyses.epps = Some(EppsConfig::default());

    let mut checks = Vec::new();
    for (name, cfg) in [("series", &series), ("rates", &rates)] {
        let (same, files) = rerun_identical(dir.path(), name, cfg);
        checks.push(check(name, same, format!("{name} run: {files} files identical {same}")));
    }
    // prices from the rate run, turned into detrended volatility
    let mut prices = RunConfig::new(Source {
        paths: vec![dir.path().join("rates-1").join("series_X_USD.csv")],
        ..Source::default()
    });
    prices.returns = Some(ReturnsConfig { kind: PreparedKind::Volatility, detrend_daily: true, ..ReturnsConfig::default() });
    prices.analyses = Analyses {
        distfit: Some(DistfitConfig::default()),
        autocorr: Some(AutocorrConfig { max_lag: 200, fit_window: None }),
        mfdfa: Some(MfdfaRun { shuffle_seed: Some(9), ..MfdfaRun::default() }),
        ..Analyses::default()
    };
    let (same, files) = rerun_identical(dir.path(), "prices", &prices);
    checks.push(check("prices", same, format!("price-file run: {files} files identical {same}")));
    checks
}

fn main() -> ExitCode {
    let criteria = [
        Criterion { id: 1, title: "q-Gaussian machinery", budget: Duration::from_secs(10), run: c1_qgaussian_machinery },
        Criterion { id: 2, title: "fit recovery", budget: Duration::from_secs(120), run: c2_fit_recovery },
        Criterion { id: 3, title: "MFDFA monofractal", budget: Duration::from_secs(120), run: c3_monofractal },
        Criterion { id: 4, title: "MFDFA multifractal", budget: Duration::from_secs(120), run: c4_multifractal },
        Criterion { id: 5, title: "anomalous regime", budget: Duration::from_secs(120), run: c5_anomalous },
        Criterion { id: 6, title: "shuffle destruction", budget: Duration::from_secs(120), run: c6_shuffle },
        Criterion { id: 7, title: "random matrix", budget: Duration::from_secs(60), run: c7_rmt },
        Criterion { id: 8, title: "triangle identity", budget: Duration::from_secs(60), run: c8_triangle },
        Criterion { id: 9, title: "Epps shape", budget: Duration::from_secs(60), run: c9_epps_shape },
        Criterion { id: 10, title: "autocorrelation", budget: Duration::from_secs(60), run: c10_autocorrelation },
        Criterion { id: 11, title: "brute-force equivalence", budget: Duration::from_secs(60), run: c11_brute_force },
        Criterion { id: 12, title: "determinism", budget: Duration::from_secs(300), run: c12_determinism },
    ];
    let suite = Instant::now();
    let mut passed = 0;
    let mut unexpected = Vec::new();
    for c in &criteria {
        let t = Instant::now();
        let mut checks = (c.run)();
        let elapsed = t.elapsed();
        if c.id == 12 {
            let total = suite.elapsed();
            let ok = total <= Duration::from_secs(300);
            checks.push(check("suite", ok, format!("suite {:.1} s (<= 300 s)", total.as_secs_f64())));
        }
        checks.push(check("time", elapsed <= c.budget, format!("{:.2} s (<= {} s)", elapsed.as_secs_f64(), c.budget.as_secs())));
        let ok = checks.iter().all(|k| k.ok);
        let details: Vec<String> =
            checks.iter().map(|k| if k.ok { k.detail.clone() } else { format!("FAILED {}", k.detail) }).collect();
        println!("{} [{:>2}] {}: {}", if ok { "PASS" } else { "FAIL" }, c.id, c.title, details.join("; "));
        if ok {
            passed += 1;
        }
        for k in checks.iter().filter(|k| !k.ok) {
            if !UNATTAINABLE.contains(&(c.id, k.key)) {
                unexpected.push(format!("criterion {} check '{}'", c.id, k.key));
            }
        }
    }
    println!("{passed} of {} criteria pass", criteria.len());
    for &(id, key) in UNATTAINABLE {
        println!("known unattainable: criterion {id} check '{key}'");
    }
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("unexpected failures: {}", unexpected.join(", "));
        ExitCode::FAILURE
    }
}
