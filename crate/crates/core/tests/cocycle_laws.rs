use ergoflow::cocycle::*;
use ergoflow::paths::PiecewisePath;
use ergoflow::renewal::{simulate_renewal, GapLaw, Horizon};
use ergoflow::stable_ml::StableSpec;
use ergoflow::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const REACH: f64 = 20.0;

/// Random path on `[-REACH, REACH]` (or a little beyond) with a breakpoint at 0.
fn two_sided_path(rng: &mut ChaCha8Rng, linear: bool) -> PiecewisePath {
    let mut b = vec![-REACH];
    while *b.last().unwrap() < REACH {
        let next = b.last().unwrap() + rng.random_range(0.05..2.0);
        if *b.last().unwrap() < 0.0 && next > 0.0 {
            b.push(0.0);
        }
        b.push(next);
    }
    let v: Vec<f64> = b.iter().map(|_| rng.random_range(-4.0..4.0)).collect();
    if linear {
        PiecewisePath::linear(b, v).unwrap()
    } else {
        PiecewisePath::step(b, v).unwrap()
    }
}

fn cases(seed: u64, n: usize, linear: bool) -> Vec<(PiecewisePath, f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let x = two_sided_path(&mut rng, linear);
            (x, rng.random_range(-6.0..6.0), rng.random_range(-6.0..6.0))
        })
        .collect()
}

fn renewal_cases(seed: u64, n: usize) -> Vec<(PiecewisePath, f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let law = GapLaw::pareto(0.5).unwrap();
    (0..n)
        .map(|_| {
            let x = simulate_renewal(&law, Horizon::ByTime(REACH), true, &mut rng).unwrap();
            (x, rng.random_range(-6.0..6.0), rng.random_range(-6.0..6.0))
        })
        .collect()
}

#[test]
fn shipped_cocycles_satisfy_the_cocycle_law() {
    let flow = IncrementFlow;
    let step = cases(1, 1000, false);
    let lin = cases(2, 1000, true);
    let ren = renewal_cases(3, 1000);
    let tol = 1e-9;
    for set in [&step, &lin] {
        assert!(verify_cocycle_law(&flow, &Coordinate, set).unwrap() < tol);
        assert!(verify_cocycle_law(&flow, &FunctionGenerated::Constant(2.5), set).unwrap() < tol);
        assert!(verify_cocycle_law(&flow, &FunctionGenerated::ForwardIncrement { h: 1.5 }, set).unwrap() < tol);
        assert!(verify_cocycle_law(&flow, &HahnPart(HahnSign::Positive), set).unwrap() < tol);
        assert!(verify_cocycle_law(&flow, &HahnPart(HahnSign::Negative), set).unwrap() < tol);
    }
    assert!(verify_cocycle_law(&flow, &Counting, &step).unwrap() < tol);
    assert_eq!(verify_cocycle_law(&flow, &Counting, &ren).unwrap(), 0.0);
}

#[test]
fn hahn_parts_split_the_coordinate_cocycle() {
    for (x, s, _) in cases(4, 500, false).into_iter().chain(cases(5, 500, true)) {
        let whole = Coordinate.eval(&x, s).unwrap();
        let plus = HahnPart(HahnSign::Positive).eval(&x, s).unwrap();
        let minus = HahnPart(HahnSign::Negative).eval(&x, s).unwrap();
        assert!((whole - (plus - minus)).abs() < 1e-9);
        // Each part is monotone in t.
        assert!(plus * s.signum() >= -1e-12 && minus * s.signum() >= -1e-12);
    }
}

#[test]
fn counting_cocycle_on_a_renewal_path() {
    let b = vec![-3.0, -1.5, 0.0, 1.0, 2.5, 4.0];
    let v = vec![-2.0, -1.0, 0.0, 1.0, 2.0, 2.0];
    let x = PiecewisePath::step(b, v).unwrap();
    assert_eq!(Counting.eval(&x, 2.5).unwrap(), 2.0);
    assert_eq!(Counting.eval(&x, 0.5).unwrap(), 0.0);
    assert_eq!(Counting.eval(&x, -1.5).unwrap(), -1.0);
    assert_eq!(Counting.eval(&x, -1.0).unwrap(), -1.0);
    assert_eq!(Counting.eval(&x, -2.0).unwrap(), -2.0);
    assert!(Counting.eval(&x, 5.0).is_err());
    let lin = PiecewisePath::linear(vec![0.0, 1.0], vec![0.0, 1.0]).unwrap();
    assert!(Counting.eval(&lin, 0.5).is_err());
}

#[test]
fn discrete_cocycle_law_on_symbol_words() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let phi = DiscreteGenerated { phi: |s: u64| (s as f64).sqrt() - 1.0 };
    let cases: Vec<(SymbolWord, i64, i64)> = (0..1000)
        .map(|_| {
            let w: Vec<u64> = (0..200).map(|_| rng.random_range(1..10)).collect();
            (SymbolWord::new(w, 100).unwrap(), rng.random_range(-40..40), rng.random_range(-40..40))
        })
        .collect();
    assert!(phi.verify_law(&cases).unwrap() < 1e-9);
    let w = SymbolWord::new(vec![1, 2, 3], 1).unwrap();
    assert_eq!(w.at(-1).unwrap(), 1);
    assert!(w.at(2).is_err());
    assert!(w.shift(5).is_err());
}

#[test]
fn counting_cross_section_integral_is_exactly_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let section = RenewalSection { law: GapLaw::geometric(0.5).unwrap(), events: 20 };
    let est = integral_cross_section(&Counting, &section, 2000, &mut rng).unwrap();
    assert_eq!(est, IntegralEstimate::Finite { value: 1.0, se: Some(0.0), n: 2000 });
}

#[test]
fn flow_average_matches_cross_section_integral() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let measure = StationaryRenewal { law: GapLaw::geometric(0.5).unwrap(), reach: 3.0 };
    for t in [0.5, 1.0, 2.0] {
        let est = integral_flow_average(&Counting, &measure, t, 40_000, &mut rng).unwrap();
        let (v, se) = (est.value().unwrap(), est.se().unwrap());
        assert!((v - 1.0).abs() < 3.0 * se, "t = {t}: {v} ± {se}");
    }
    let table = StationaryRenewal { law: GapLaw::table(vec![0.2, 0.3, 0.5]).unwrap(), reach: 4.0 };
    let est = integral_flow_average(&Counting, &table, 1.0, 40_000, &mut rng).unwrap();
    assert!((est.value().unwrap() - 1.0).abs() < 3.0 * est.se().unwrap());
}

#[test]
fn return_time_integral_diverges_for_heavy_tails() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let heavy = RenewalSection { law: GapLaw::pareto_integer(0.5).unwrap(), events: 1 };
    let est = integral_cross_section(&FunctionGenerated::Constant(1.0), &heavy, 4096, &mut rng).unwrap();
    assert!(matches!(est, IntegralEstimate::Divergent { .. }), "{est:?}");
    assert!(est.value().is_none());
    let light = RenewalSection { law: GapLaw::geometric(0.5).unwrap(), events: 1 };
    let est = integral_cross_section(&FunctionGenerated::Constant(1.0), &light, 4096, &mut rng).unwrap();
    let (v, se) = (est.value().unwrap(), est.se().unwrap());
    assert!((v - 2.0).abs() < 4.0 * se);
}

#[test]
fn birkhoff_and_hopf_ratios() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let x = simulate_renewal(&GapLaw::geometric(0.25).unwrap(), Horizon::ByTime(1e5), false, &mut rng).unwrap();
    let rate = birkhoff_cocycle(&Counting, &x, 1e5).unwrap();
    assert!((rate - 0.25).abs() < 0.01);
    let r = hopf_ratio(&Counting, &FunctionGenerated::Constant(1.0), &x, 1e5).unwrap();
    assert_eq!(r, rate);
    let quiet = PiecewisePath::step(vec![0.0, 5.0], vec![0.0, 0.0]).unwrap();
    assert!(matches!(hopf_ratio(&Coordinate, &Counting, &quiet, 2.0), Err(Error::NotYetRecurrent(_))));
    assert!(birkhoff_cocycle(&Counting, &x, 0.0).is_err());
}

#[test]
fn mittag_leffler_measure_covers_the_requested_reach() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let m = MittagLefflerPaths { spec: StableSpec::canonical(0.5).unwrap(), reach: 10.0, grid_step: 0.25 };
    for _ in 0..20 {
        let p = m.sample(&mut rng).unwrap();
        assert!(p.t_max() >= 10.0);
        assert!(p.is_nondecreasing());
    }
    assert_eq!(m.mass(), 1.0);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 1000, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn cocycle_law_holds_pointwise(seed in any::<u64>(), s in -6.0f64..6.0, t in -6.0f64..6.0, linear in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = two_sided_path(&mut rng, linear);
        let case = [(x, s, t)];
        let flow = IncrementFlow;
        let forward = FunctionGenerated::ForwardIncrement { h: 0.7 };
        prop_assert!(verify_cocycle_law(&flow, &Coordinate, &case).unwrap() < 1e-9);
        prop_assert!(verify_cocycle_law(&flow, &forward, &case).unwrap() < 1e-9);
        prop_assert!(verify_cocycle_law(&flow, &HahnPart(HahnSign::Positive), &case).unwrap() < 1e-9);
        if !linear {
            prop_assert!(verify_cocycle_law(&flow, &Counting, &case).unwrap() < 1e-9);
        }
    }
}
