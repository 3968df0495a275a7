use fxstats::ingest::{segment_weeks, WeekWindow};
use fxstats::quadrature::integrate;
use fxstats::rmt::*;
use fxstats::synth::{generate, GeneratorKind, GeneratorSpec, DEFAULT_START};
use fxstats::TimeGrid;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn noise_rows(seed: u64, k: usize, t: usize) -> Vec<Vec<f64>> {
    (0..k as u64)
        .map(|i| generate(&GeneratorSpec::new(GeneratorKind::IidGaussian, seed * 10_000 + i, t)).unwrap().returns().unwrap().values)
        .collect()
}

fn spectrum(rows: &[Vec<f64>]) -> (SegmentMatrix, CorrelationMatrix, EigenDecomposition) {
    let m = SegmentMatrix::from_rows(rows, 60).unwrap();
    let c = correlation_matrix(&m);
    let d = diagonalize(&c.c).unwrap();
    (m, c, d)
}

/// ∫ρ over the support, through λ = λ_min + Δ(1 − cos θ)/2 so the square-root
/// edges become smooth.
fn mp_mass(q: f64) -> f64 {
    let mp = MpDensity::new(q, 1.0).unwrap();
    let d = mp.lambda_max - mp.lambda_min;
    let g = |th: f64| {
        let lam = mp.lambda_min + 0.5 * d * (1.0 - th.cos());
        let s = 0.5 * d * th.sin();
        if lam <= 0.0 {
            // Q = 1: ρ(λ)·dλ/dθ → Q Δ/(2π) at θ = 0
            return q * d / (2.0 * std::f64::consts::PI);
        }
        q / (2.0 * std::f64::consts::PI) * s * s / lam
    };
    integrate(g, 0.0, std::f64::consts::PI, 1e-12).0
}

#[test]
fn marchenko_pastur_density_is_normalized() {
    for q in [1.0, 2.0, 10.0, 7260.0 / 169.0] {
        let m = mp_mass(q);
        assert!((m - 1.0).abs() < 1e-6, "Q = {q}: {m}");
    }
}

#[test]
fn density_formula_agrees_with_the_substitution() {
    let mp = MpDensity::new(2.0, 1.0).unwrap();
    let (direct, _) = integrate(|l| mp.density(l), mp.lambda_min, mp.lambda_max, 1e-10);
    assert!((direct - 1.0).abs() < 1e-4, "{direct}");
    assert_eq!(mp.density(mp.lambda_max + 0.1), 0.0);
}

#[test]
fn weekly_segmentation_of_a_long_series_gives_the_matrix_shape() {
    // 1,703,580 one-minute returns from Friday 2004-01-02 21:00 hold 169 windows
    let n = 1_703_580;
    let grid = TimeGrid::new(DEFAULT_START, 60, n).unwrap();
    let seg = segment_weeks(&grid, &WeekWindow::default()).unwrap();
    assert_eq!(seg.weeks(), 169);
    let mut spec = GeneratorSpec::new(GeneratorKind::IidGaussian, 3, n);
    spec.start_epoch = DEFAULT_START;
    let series = generate(&spec).unwrap().returns().unwrap();
    let m = build_segment_matrix(&series, &seg).unwrap();
    assert_eq!((m.k(), m.t_k()), (169, 7260));
    assert!((m.q() - 42.96).abs() < 0.005);
    for i in [0, 84, 168] {
        let row: Vec<f64> = m.m.row(i).iter().copied().collect();
        let (mu, sd) = fxstats::stats::mean_std(&row);
        assert!(mu.abs() < 1e-10 && (sd - 1.0).abs() < 1e-10);
    }
}

#[test]
fn iid_rows_follow_marchenko_pastur() {
    let (m, c, d) = spectrum(&noise_rows(1, 169, 7260));
    let expected = 1.0 / 7260f64.sqrt();
    assert!((c.elements.std / expected - 1.0).abs() < 0.1, "{}", c.elements.std);
    let mp = MpDensity::new(m.q(), 1.0).unwrap();
    assert!(mp.fraction_outside(&d.eigenvalues) <= 0.05);
    assert!((d.eigenvalues.iter().sum::<f64>() - 169.0).abs() < 1e-8);
}

#[test]
fn planted_weekly_spike_dominates_the_first_eigensignal() {
    for seed in 1..=10 {
        let mut rows = noise_rows(100 + seed, 169, 7260);
        let offset = 1000 + 37 * seed as usize;
        for r in &mut rows {
            r[offset] += 10.0;
        }
        let (m, _, d) = spectrum(&rows);
        let z = eigensignal(&m, &d, 1).unwrap();
        assert_eq!(z.argmax_abs(), offset, "seed {seed}");
        assert_eq!(z.outliers(10.0, &m)[0].index, offset);
    }
}

#[test]
fn noise_eigensignals_rarely_exceed_six_sigma() {
    let quiet = (0..20u64)
        .filter(|&s| {
            let (m, _, d) = spectrum(&noise_rows(500 + s, 40, 7260));
            let z = eigensignal(&m, &d, 1).unwrap();
            z.outliers(6.0, &m).is_empty()
        })
        .count();
    assert!(quiet >= 19, "{quiet}/20");
}

#[test]
fn eigensignal_is_the_projection() {
    let (m, _, d) = spectrum(&noise_rows(7, 6, 300));
    let z = eigensignal(&m, &d, 2).unwrap();
    for t in [0, 150, 299] {
        let want: f64 = (0..6).map(|b| d.eigenvectors[(b, 1)] * m.m[(b, t)]).sum();
        assert_eq!(z.z[t], want);
    }
    assert!(eigensignal(&m, &d, 7).unwrap_err().is_usage());
}

#[test]
fn all_ones_matrix_has_one_nonzero_eigenvalue() {
    let d = diagonalize(&DMatrix::from_element(5, 5, 1.0)).unwrap();
    assert!((d.eigenvalues[0] - 5.0).abs() < 1e-12);
    assert!(d.eigenvalues[1..].iter().all(|&l| l == 0.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn spectrum_invariants(seed in 0u64..10_000, k in 2usize..12, rot in 1usize..11) {
        let rows = noise_rows(seed, k, 64);
        let (_, c, d) = spectrum(&rows);
        let total: f64 = d.eigenvalues.iter().sum();
        prop_assert!((total - c.c.trace()).abs() < 1e-8 && (total - k as f64).abs() < 1e-8);
        prop_assert!(d.eigenvalues.iter().all(|&l| l >= -1e-10));
        prop_assert!(d.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
        let v = &d.eigenvectors;
        let gram = v.transpose() * v;
        prop_assert!((gram - DMatrix::<f64>::identity(k, k)).amax() < 1e-8);

        // reordering the segments permutes C but keeps its spectrum
        let mut shuffled = rows.clone();
        shuffled.rotate_left(rot % k);
        let (_, _, d2) = spectrum(&shuffled);
        for (a, b) in d.eigenvalues.iter().zip(&d2.eigenvalues) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }
}
