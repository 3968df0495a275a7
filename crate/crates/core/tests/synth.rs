use fxstats::synth::*;
use fxstats::temporal::autocorrelation_of;
use proptest::prelude::*;

fn kinds() -> Vec<GeneratorKind> {
    vec![
        GeneratorKind::IidGaussian,
        GeneratorKind::Ar1 { phi: -0.4 },
        GeneratorKind::BinomialCascade { a: 0.7, conservation: Conservation::InAverage, weight_sigma: 0.3 },
        GeneratorKind::QGaussianIid { q: 1.4, b: 0.5, mu: 0.1 },
        GeneratorKind::LongMemoryVolatility { exponent: 0.3, kappa: 0.5 },
        GeneratorKind::TriangleConsistentRates { sigma: 1e-4, block: 16 },
        GeneratorKind::LagCoupledPair { lag: 3, noise: 0.5 },
        GeneratorKind::SpikedResidual { rate: 0.01, scale: 5.0, tail_index: 1.5 },
    ]
}

fn values(g: Generated) -> Vec<Vec<f64>> {
    match g {
        Generated::Returns(r) => vec![r.values],
        Generated::Rates(rs) => rs.into_iter().map(|t| t.values().to_vec()).collect(),
    }
}

#[test]
fn ar1_lag_one_matches_phi() {
    let n = 100_000;
    for (seed, phi) in [(1, -0.8), (2, -0.3), (3, 0.0), (4, 0.25), (5, 0.5), (6, 0.9)] {
        let x = generate(&GeneratorSpec::new(GeneratorKind::Ar1 { phi }, seed, n)).unwrap().returns().unwrap();
        let c1 = autocorrelation_of(&x.values, 1).unwrap().c[1];
        assert!((c1 - phi).abs() < 3.0 / (n as f64).sqrt(), "phi {phi}: {c1}");
    }
}

#[test]
fn in_average_cascade_conserves_mass_on_average() {
    let kind = GeneratorKind::BinomialCascade { a: 0.6, conservation: Conservation::InAverage, weight_sigma: 0.3 };
    let total: f64 = (0..1000u64)
        .map(|s| canonical_cascade(&GeneratorSpec::new(kind.clone(), s, 1 << 10)).unwrap().iter().sum::<f64>())
        .sum();
    assert!((total / 1000.0 - 1.0).abs() < 0.05, "{}", total / 1000.0);
}

#[test]
fn exact_cascade_conserves_mass_at_every_depth() {
    for m in 1..=12 {
        let kind = GeneratorKind::BinomialCascade { a: 0.65, conservation: Conservation::Exact, weight_sigma: 0.3 };
        let c = canonical_cascade(&GeneratorSpec::new(kind, 1, 1 << m)).unwrap();
        assert!((c.iter().sum::<f64>() - 1.0).abs() < 1e-12, "depth {m}");
    }
}

#[test]
fn invalid_parameters_are_usage_errors() {
    let bad = [
        GeneratorKind::Ar1 { phi: 1.0 },
        GeneratorKind::QGaussianIid { q: 3.0, b: 1.0, mu: 0.0 },
        GeneratorKind::LongMemoryVolatility { exponent: 1.2, kappa: 0.5 },
        GeneratorKind::SpikedResidual { rate: 0.7, scale: 1.0, tail_index: 1.0 },
    ];
    for kind in bad {
        assert!(generate(&GeneratorSpec::new(kind.clone(), 1, 96)).unwrap_err().is_usage(), "{kind:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn identical_specs_give_identical_output(seed in any::<u64>(), k in 0usize..8) {
        let kind = kinds()[k].clone();
        let n = if matches!(kind, GeneratorKind::BinomialCascade { .. }) { 128 } else { 96 };
        let spec = GeneratorSpec::new(kind, seed, n);
        let a = values(generate(&spec).unwrap());
        let b = values(generate(&spec).unwrap());
        prop_assert_eq!(&a, &b);
        let other = GeneratorSpec { seed: seed.wrapping_add(1), ..spec };
        prop_assert_ne!(a, values(generate(&other).unwrap()));
    }
}
