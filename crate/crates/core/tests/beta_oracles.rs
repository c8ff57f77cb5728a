use maud_core::quadrature::integrate;
use maud_core::roots::golden_section_min;
use maud_core::uncertainty::{
    expected_utility, expected_utility_quadrature, expected_utility_series, fit_beta,
    AttributeEstimate, BetaSpec, FitTarget, KnownShape,
};
use maud_core::{make_exponential_utility, AttributeSpec, Error, SingleAttributeUtility};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;
use statrs::distribution::{Beta as StatrsBeta, Continuous};

const GRID: [f64; 6] = [1.0, 1.5, 2.0, 3.0, 5.0, 9.0];

fn utility(worst: f64, best: f64, c: f64) -> SingleAttributeUtility {
    make_exponential_utility(AttributeSpec::new("x", "X", "", worst, best).unwrap(), c).unwrap()
}

#[test]
fn density_integrates_to_one_on_shape_grid() {
    for &(lo, hi) in &[(0.0, 1.0), (10.0, 100.0), (-3.0, -2.5)] {
        for p in GRID {
            for q in GRID {
                let spec = BetaSpec::new(lo, hi, p, q).unwrap();
                let mass = integrate(|x| spec.density(x), lo, hi, 1e-12).unwrap().value;
                assert!(
                    (mass - 1.0).abs() < 1e-8,
                    "({p}, {q}) on ({lo}, {hi}): {mass}"
                );
            }
        }
    }
}

#[test]
fn density_matches_independent_library() {
    for p in GRID {
        for q in GRID {
            let spec = BetaSpec::new(10.0, 100.0, p, q).unwrap();
            let reference = StatrsBeta::new(p, q).unwrap();
            for i in 1..20 {
                let y = f64::from(i) / 20.0;
                let want = reference.pdf(y) / 90.0;
                let got = spec.density(10.0 + 90.0 * y);
                assert!(
                    (got - want).abs() <= 1e-12 * want.max(1.0),
                    "({p},{q}) y={y}"
                );
            }
            assert_eq!(spec.density(9.0), 0.0);
            assert_eq!(spec.density(101.0), 0.0);
        }
    }
}

#[test]
fn closed_form_moments_match_numerical() {
    for p in GRID {
        for q in GRID {
            let spec = BetaSpec::new(10.0, 100.0, p, q).unwrap();
            let mean = integrate(|x| x * spec.density(x), 10.0, 100.0, 1e-11)
                .unwrap()
                .value;
            assert!((mean - spec.mean()).abs() < 1e-6, "mean ({p},{q})");
            if p > 1.0 && q > 1.0 {
                let argmax = golden_section_min(|x| -spec.density(x), 10.0, 100.0, 1e-10);
                assert!(
                    (argmax - spec.mode().unwrap()).abs() < 1e-6,
                    "mode ({p},{q})"
                );
            }
        }
    }
}

#[test]
fn fit_from_mode_example() {
    let spec = fit_beta(10.0, 100.0, KnownShape::P(1.1), FitTarget::Mode(18.0)).unwrap();
    // q = 0.1 * 90 / 8 - 1.1 + 2
    assert!((spec.q - 2.025).abs() < 1e-12);
    // 10 + 90 * 1.1 / 3.125
    assert!((spec.mean() - 41.68).abs() < 1e-9);
    assert!((spec.mode().unwrap() - 18.0).abs() < 1e-9);
}

#[test]
fn fit_examples_and_infeasible_interval() {
    let s = fit_beta(0.0, 1.0, KnownShape::P(2.0), FitTarget::Mean(0.5)).unwrap();
    assert_eq!(s.q, 2.0);
    let s = fit_beta(0.0, 1.0, KnownShape::Q(3.0), FitTarget::Mean(0.25)).unwrap();
    assert!((s.p - 1.0).abs() < 1e-15);
    match fit_beta(0.0, 1.0, KnownShape::P(2.0), FitTarget::Mean(0.9)) {
        Err(Error::InfeasibleFit {
            feasible_min,
            feasible_max,
            ..
        }) => {
            assert_eq!(feasible_min, 0.0);
            assert!((feasible_max - 2.0 / 3.0).abs() < 1e-15);
        }
        other => panic!("expected infeasible fit, got {other:?}"),
    }
}

proptest! {
    #[test]
    fn fit_round_trips(
        lo in -100.0f64..100.0,
        width in 0.1f64..500.0,
        known in 1.0f64..12.0,
        frac in 0.02f64..0.98,
        use_p in any::<bool>(),
        use_mode in any::<bool>(),
    ) {
        let hi = lo + width;
        let known_shape = if use_p { KnownShape::P(known) } else { KnownShape::Q(known) };
        let target_value = lo + frac * width;
        let target = if use_mode { FitTarget::Mode(target_value) } else { FitTarget::Mean(target_value) };
        match fit_beta(lo, hi, known_shape, target) {
            Ok(spec) => {
                let got = if use_mode { spec.mode().unwrap() } else { spec.mean() };
                prop_assert!((got - target_value).abs() <= 1e-12 * target_value.abs().max(width));
                prop_assert!(spec.p >= 1.0 && spec.q >= 1.0);
            }
            Err(Error::InfeasibleFit { feasible_min, feasible_max, .. }) => {
                prop_assert!(target_value <= feasible_min || target_value >= feasible_max);
            }
            Err(Error::InvalidBeta(_)) => prop_assert!(use_mode && known == 1.0),
            Err(e) => prop_assert!(false, "unexpected {e}"),
        }
    }

    /// A larger shape on the side away from the best end shifts mass toward best.
    #[test]
    fn dominance_raises_expected_utility(
        p in 1.0f64..8.0,
        q in 1.0f64..8.0,
        c in -10.0f64..10.0,
        increasing in any::<bool>(),
    ) {
        let (worst, best) = if increasing { (0.0, 50.0) } else { (50.0, 0.0) };
        let u = utility(worst, best, c);
        let base = BetaSpec::new(10.0, 40.0, p, q).unwrap();
        let better = if increasing {
            BetaSpec::new(10.0, 40.0, p + 1.0, q).unwrap()
        } else {
            BetaSpec::new(10.0, 40.0, p, q + 1.0).unwrap()
        };
        let a = expected_utility_quadrature(&u, &better).unwrap();
        let b = expected_utility_quadrature(&u, &base).unwrap();
        prop_assert!(a >= b - 1e-12, "{a} < {b}");
    }
}

fn random_spec(rng: &mut ChaCha8Rng, worst: f64, best: f64) -> BetaSpec {
    let (lo, hi) = (worst.min(best), worst.max(best));
    let a = rng.random_range(lo..hi);
    let b = rng.random_range(lo..hi);
    let (a, b) = (a.min(b), a.max(b) + 1e-6);
    BetaSpec::new(
        a,
        b.min(hi),
        rng.random_range(1.0..10.0),
        rng.random_range(1.0..10.0),
    )
    .unwrap()
}

#[test]
fn jensen_bounds() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let (worst, best) = if rng.random() {
            (0.0, 80.0)
        } else {
            (80.0, 0.0)
        };
        let spec = random_spec(&mut rng, worst, best);
        let c = rng.random_range(0.05..20.0);
        for (sign, label) in [(1.0, "concave"), (-1.0, "convex")] {
            let u = utility(worst, best, sign * c);
            let eu = expected_utility_quadrature(&u, &spec).unwrap();
            let at_mean = u.evaluate(spec.mean()).unwrap();
            if sign > 0.0 {
                assert!(eu <= at_mean + 1e-10, "{label}: {eu} > {at_mean}");
            } else {
                assert!(eu >= at_mean - 1e-10, "{label}: {eu} < {at_mean}");
            }
        }
        let linear = utility(worst, best, 0.0);
        let eu = expected_utility_quadrature(&linear, &spec).unwrap();
        assert!((eu - linear.evaluate(spec.mean()).unwrap()).abs() <= 1e-10);
    }
}

#[test]
fn series_agrees_with_quadrature_on_integer_grid() {
    // (attribute range, support)
    let cases = [((0.0, 1.0), (0.0, 1.0)), ((200.0, 20.0), (35.0, 120.0))];
    for ((worst, best), (lo, hi)) in cases {
        for c in [-2.0, -0.5, 0.5, 2.0] {
            let u = utility(worst, best, c);
            for p in 1..=9 {
                for q in 1..=9 {
                    let spec = BetaSpec::new(lo, hi, f64::from(p), f64::from(q)).unwrap();
                    let s = expected_utility_series(&u, &spec).unwrap();
                    let g = expected_utility_quadrature(&u, &spec).unwrap();
                    assert!((s - g).abs() <= 1e-7, "p={p} q={q} c={c}: {s} vs {g}");
                }
            }
        }
    }
}

#[test]
fn quadrature_matches_monte_carlo() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let u = utility(200.0, 20.0, 3.0);
    let spec = BetaSpec::new(40.0, 150.0, 2.5, 4.0).unwrap();
    let draw = rand_distr::Beta::new(2.5, 4.0).unwrap();
    let n = 200_000;
    let (mut sum, mut sq) = (0.0, 0.0);
    for _ in 0..n {
        let v = u.evaluate(40.0 + 110.0 * draw.sample(&mut rng)).unwrap();
        sum += v;
        sq += v * v;
    }
    let mean = sum / n as f64;
    let sd = ((sq / n as f64 - mean * mean) / n as f64).sqrt();
    let got = expected_utility_quadrature(&u, &spec).unwrap();
    assert!((mean - got).abs() <= 3.0 * sd, "mc {mean} vs {got}");
}

#[test]
fn expected_utility_examples() {
    let linear = utility(0.0, 1.0, 0.0);
    let uniform = BetaSpec::uniform(0.0, 1.0).unwrap();
    assert!((expected_utility_quadrature(&linear, &uniform).unwrap() - 0.5).abs() < 1e-12);
    let concentrated = BetaSpec::new(0.0, 1.0, 50.0, 50.0).unwrap();
    let u = utility(0.0, 1.0, 2.0);
    let eu = expected_utility_quadrature(&u, &concentrated).unwrap();
    assert!((eu - u.evaluate(0.5).unwrap()).abs() < 5e-3);
    assert_eq!(
        expected_utility(&u, &AttributeEstimate::Point(0.3)).unwrap(),
        u.evaluate(0.3).unwrap()
    );
    let outside = BetaSpec::new(0.5, 1.5, 2.0, 2.0).unwrap();
    assert!(matches!(
        expected_utility_quadrature(&u, &outside),
        Err(Error::EstimateRange { .. })
    ));
}
