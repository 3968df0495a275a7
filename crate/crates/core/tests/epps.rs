use fxstats::epps::*;
use fxstats::synth::{generate, GeneratorKind, GeneratorSpec};
use fxstats::TickSeries;

fn rates(kind: GeneratorKind, seed: u64, n: usize) -> Vec<TickSeries> {
    generate(&GeneratorSpec::new(kind, seed, n)).unwrap().rates().unwrap()
}

fn triple(r: &[TickSeries]) -> [&TickSeries; 3] {
    [&r[0], &r[1], &r[2]]
}

#[test]
fn triangle_has_a_zero_mode_at_every_scale() {
    let r = rates(GeneratorKind::TriangleConsistentRates { sigma: 1e-4, block: 1024 }, 7, 3 * 1024 * 20);
    // present the pairs out of cyclic order and with one quoted inversely
    let shuffled = [r[2].clone(), r[0].inverted(), r[1].clone()];
    let e = epps_curve([&shuffled[0], &shuffled[1], &shuffled[2]], &default_dt_grid(), true).unwrap();
    assert_eq!(e.inverted, [false, true, false]);
    for l in &e.lambdas {
        assert!(l[2] <= 1e-10 && l[2] >= -1e-10);
        assert!((l[0] + l[1] - 3.0).abs() < 1e-8);
    }
    let v3 = e.eigenvectors_at_max_dt[2];
    for c in v3 {
        assert!((c - 1.0 / 3f64.sqrt()).abs() < 1e-6, "{v3:?}");
    }
}

#[test]
fn independent_rates_are_uncorrelated() {
    let r: Vec<TickSeries> = (0..3u64)
        .map(|i| {
            let z = generate(&GeneratorSpec::new(GeneratorKind::IidGaussian, 40 + i, 1_000_000)).unwrap().returns().unwrap();
            let mut p = 1.0;
            let prices = std::iter::once(1.0).chain(z.values.iter().map(|v| {
                p *= (1e-3 * v).exp();
                p
            }));
            TickSeries::from_prices(0, 60, prices.collect(), format!("X{i}/USD")).unwrap()
        })
        .collect();
    let e = epps_curve(triple(&r), &default_dt_grid(), false).unwrap();
    for (dt, l) in e.dt_grid.iter().zip(&e.lambdas) {
        assert!(l.iter().all(|x| (x - 1.0).abs() < 0.05), "dt {dt}: {l:?}");
        assert!((l.iter().sum::<f64>() - 3.0).abs() < 1e-8);
    }
}

#[test]
fn lag_coupling_sets_the_saturation_scale() {
    for lag in [8, 32] {
        let r = rates(GeneratorKind::LagCoupledPair { lag, noise: 0.5 }, 1, 1 << 21);
        let e = epps_curve(triple(&r), &default_dt_grid(), false).unwrap();
        let l1 = e.lambda1();
        // 1, 2, 4, 8: the first decade of time scales
        assert!(l1[..4].windows(2).all(|w| w[1] > w[0]), "{l1:?}");
        let s = saturation_scale(&e.dt_grid, &l1, 0.95).unwrap();
        let dt = s.dt.expect("saturated");
        assert!(dt >= lag && dt <= 4 * lag, "lag {lag}: {dt}");
        let last = *l1.last().unwrap();
        let i = e.dt_grid.iter().position(|&d| d == 4 * lag).unwrap();
        assert!(l1[i..].iter().all(|&v| v >= 0.95 * last));
    }
}

#[test]
fn non_triangle_and_oversized_scales_are_usage_errors() {
    let r = rates(GeneratorKind::LagCoupledPair { lag: 2, noise: 1.0 }, 1, 20_000);
    assert!(epps_curve(triple(&r), &[1, 2, 4], true).unwrap_err().is_usage());
    assert!(epps_curve(triple(&r), &[1, 512], false).unwrap_err().is_usage());
    assert!(epps_curve(triple(&r), &[4, 2], false).unwrap_err().is_usage());
    let short = TickSeries::from_prices(r[0].grid().start_epoch(), 60, r[0].values()[..100].to_vec(), "Q/R").unwrap();
    assert!(epps_curve([&r[0], &r[1], &short], &[1], false).is_err());
}
