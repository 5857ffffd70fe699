mod common;

use common::*;
use ergoflow::paths::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-9;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn scale(p: &PiecewisePath) -> f64 {
    p.values().iter().fold(1.0f64, |m, v| m.max(v.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 1000, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn double_inverse_of_step_path_is_identity(seed in any::<u64>(), n in 2usize..30) {
        let f = random_counting_like(&mut rng(seed), n);
        let f_hat = generalized_inverse(&f).unwrap();
        prop_assert!(f_hat.is_right_open());
        if f_hat.values().first() == f_hat.values().last() {
            // A single jump: the inverse is constant and has no inverse.
            return Ok(());
        }
        let back = generalized_inverse(&f_hat).unwrap();
        prop_assert_eq!(sup_distance_common(&back, &f).unwrap(), 0.0);
    }

    #[test]
    fn double_inverse_of_linear_path_is_exact(seed in any::<u64>(), n in 2usize..30) {
        let f = random_linear_increasing(&mut rng(seed), n);
        let back = generalized_inverse(&generalized_inverse(&f).unwrap()).unwrap();
        prop_assert_eq!(back, f);
    }

    #[test]
    fn scaling_flow_is_a_group(seed in any::<u64>(), n in 2usize..20, a in -3.0f64..3.0, b in -3.0f64..3.0, beta in 0.2f64..5.0) {
        let f = random_step(&mut rng(seed), n);
        let two = scaling_flow(&scaling_flow(&f, a, beta).unwrap(), b, beta).unwrap();
        let one = scaling_flow(&f, a + b, beta).unwrap();
        let d = sup_distance_common(&two, &one).unwrap();
        prop_assert!(d <= TOL * scale(&one), "d = {}", d);
        let id = scaling_flow(&f, 0.0, beta).unwrap();
        prop_assert_eq!(id, f);
    }

    #[test]
    fn increment_flow_is_a_group(seed in any::<u64>(), n in 3usize..20, u in 0.0f64..1.0, v in 0.0f64..1.0) {
        let f = random_linear(&mut rng(seed), n);
        let len = f.t_max();
        let (r, s) = (u * len / 2.0, v * len / 2.0);
        let two = increment_flow(&increment_flow(&f, r).unwrap(), s).unwrap();
        let one = increment_flow(&f, r + s).unwrap();
        prop_assert!(sup_distance_common(&two, &one).unwrap() <= TOL * scale(&f));
    }

    #[test]
    fn primal_flows_commute(seed in any::<u64>(), n in 2usize..20, u in 0.0f64..1.0, t in -2.0f64..2.0, alpha in 0.1f64..0.95, step in any::<bool>()) {
        let mut g = rng(seed);
        let f = if step { random_step(&mut g, n) } else { random_linear(&mut g, n) };
        let s = u * f.t_max();
        let d = commutation_check(&f, s, t, alpha, FlowPair::Primal).unwrap();
        prop_assert!(d <= TOL * scale(&f) * (-t / alpha).exp().max(1.0), "d = {}", d);
    }

    #[test]
    fn dual_flows_commute(seed in any::<u64>(), n in 2usize..20, u in 0.0f64..0.9, t in -2.0f64..2.0, alpha in 0.1f64..0.95, step in any::<bool>()) {
        let mut g = rng(seed);
        let f = if step { random_counting_like(&mut g, n) } else { random_linear_increasing(&mut g, n) };
        let s = u * f.t_max();
        let d = commutation_check(&f, s, t, alpha, FlowPair::Dual).unwrap();
        prop_assert!(d <= TOL * f.t_max() * (alpha * t).exp().max(1.0), "d = {}", d);
    }

    #[test]
    fn inverse_intertwines_increments(seed in any::<u64>(), n in 2usize..20, u in 0.0f64..0.9, step in any::<bool>()) {
        let mut g = rng(seed);
        let f = if step { random_counting_like(&mut g, n) } else { random_linear_increasing(&mut g, n) };
        let s = u * f.t_max();
        let shifted = increment_flow(&f, s).unwrap();
        if shifted.values().first() == shifted.values().last() {
            return Ok(());
        }
        let lhs = generalized_inverse(&shifted).unwrap();
        let rhs = dual_increment(&generalized_inverse(&f).unwrap(), f.evaluate(s).unwrap(), s).unwrap();
        prop_assert!(sup_distance_common(&lhs, &rhs).unwrap() <= TOL * f.t_max());
    }

    #[test]
    fn inverse_intertwines_scalings(seed in any::<u64>(), n in 2usize..20, t in -2.0f64..2.0, alpha in 0.1f64..0.95, step in any::<bool>()) {
        let mut g = rng(seed);
        let f = if step { random_counting_like(&mut g, n) } else { random_linear_increasing(&mut g, n) };
        let lhs = generalized_inverse(&scaling_flow(&f, t, 1.0 / alpha).unwrap()).unwrap();
        let rhs = scaling_flow(&generalized_inverse(&f).unwrap(), t / alpha, alpha).unwrap();
        prop_assert!(sup_distance_common(&lhs, &rhs).unwrap() <= TOL * f.t_max() * (-t).exp().max(1.0));
    }

    #[test]
    fn hahn_parts_rebuild_the_path(seed in any::<u64>(), n in 2usize..30, step in any::<bool>()) {
        let mut g = rng(seed);
        let f = if step { random_step(&mut g, n) } else { random_linear(&mut g, n) };
        let (plus, minus) = hahn_decompose(&f).unwrap();
        prop_assert!(plus.is_nondecreasing() && minus.is_nondecreasing());
        let f0 = f.values()[0];
        let mut variation = 0.0;
        for i in 0..f.values().len() {
            let diff = plus.values()[i] - minus.values()[i] - (f.values()[i] - f0);
            prop_assert!(diff.abs() <= TOL * scale(&f));
            if i > 0 {
                variation += (f.values()[i] - f.values()[i - 1]).abs();
            }
        }
        let total = plus.values().last().unwrap() + minus.values().last().unwrap();
        prop_assert!((total - variation).abs() <= TOL * variation.max(1.0));
    }

    #[test]
    fn integral_is_additive(seed in any::<u64>(), n in 2usize..20, x in 0.0f64..1.0, y in 0.0f64..1.0, z in 0.0f64..1.0, step in any::<bool>()) {
        let mut g = rng(seed);
        let f = if step { random_step(&mut g, n) } else { random_linear(&mut g, n) };
        let mut pts = [x * f.t_max(), y * f.t_max(), z * f.t_max()];
        pts.sort_by(f64::total_cmp);
        let whole = f.integral(pts[0], pts[2]).unwrap();
        let parts = f.integral(pts[0], pts[1]).unwrap() + f.integral(pts[1], pts[2]).unwrap();
        prop_assert!((whole - parts).abs() <= TOL * scale(&f) * f.t_max());
    }

    #[test]
    fn json_round_trip_is_exact(seed in any::<u64>(), n in 2usize..20, step in any::<bool>()) {
        let mut g = rng(seed);
        let f = if step { random_step(&mut g, n) } else { random_linear(&mut g, n) };
        let f = if step && g.random_bool(0.5) { f.open_right() } else { f };
        let back: PiecewisePath = serde_json::from_str(&serde_json::to_string(&f).unwrap()).unwrap();
        prop_assert_eq!(back, f);
    }

    #[test]
    fn sup_distance_is_a_metric(seed in any::<u64>(), n in 2usize..15) {
        let mut g = rng(seed);
        // Same window so that all three distances use one domain.
        let base = random_breakpoints(&mut g, n);
        let mk = |g: &mut ChaCha8Rng| {
            PiecewisePath::step(base.clone(), (0..n).map(|_| g.random_range(-3.0..3.0)).collect()).unwrap()
        };
        let (p, q, r) = (mk(&mut g), mk(&mut g), mk(&mut g));
        let w = p.window();
        let (pq, qp) = (sup_distance(&p, &q, w).unwrap(), sup_distance(&q, &p, w).unwrap());
        prop_assert_eq!(pq, qp);
        prop_assert_eq!(sup_distance(&p, &p, w).unwrap(), 0.0);
        let pr = sup_distance(&p, &r, w).unwrap();
        let qr = sup_distance(&q, &r, w).unwrap();
        prop_assert!(pr <= pq + qr + 1e-12);
    }

    #[test]
    fn dual_graph_of_increment_is_translated_inverse_graph(seed in any::<u64>(), n in 2usize..20, u in 0.0f64..0.9, step in any::<bool>()) {
        let mut g = rng(seed);
        let f = if step { random_counting_like(&mut g, n) } else { random_linear_increasing(&mut g, n) };
        let t = u * f.t_max();
        let lhs = trim_boundary_verticals(&dual_graph(&completed_graph(&increment_flow(&f, t).unwrap()).unwrap()));
        let inv = completed_graph(&generalized_inverse(&f).unwrap()).unwrap();
        let rhs = translate_graph(&inv, -f.evaluate(t).unwrap(), -t);
        prop_assert!(graph_distance(&lhs, &rhs) <= TOL * f.t_max().max(*f.values().last().unwrap()));
    }

    #[test]
    fn first_return_of_dual_is_height_of_first_jump(seed in any::<u64>(), n in 3usize..30) {
        let f = random_counting_like(&mut rng(seed), n);
        let b = f.breakpoints();
        let v = f.values();
        let Some(i) = (1..v.len()).find(|&i| v[i] > v[i - 1]) else { return Ok(()) };
        let r = b[i];
        let f_hat = generalized_inverse(&f).unwrap();
        let hb = f_hat.breakpoints();
        let hv = f_hat.values();
        // First level above 0 where the dual jumps or its window ends.
        let r_bar = (1..hv.len())
            .find(|&k| hb[k] > 0.0 && (hv[k] > hv[k - 1] || k + 1 == hv.len()))
            .map(|k| hb[k]);
        prop_assert_eq!(r_bar, Some(f.evaluate(r).unwrap()));
    }
}

#[test]
fn linear_inverse_rejects_flat_pieces() {
    let f = PiecewisePath::linear(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 1.0]).unwrap();
    assert!(matches!(generalized_inverse(&f), Err(ergoflow::Error::Invariant(_))));
}

#[test]
fn restriction_and_interpolant_agree_on_knots() {
    let mut g = rng(5);
    let f = random_step(&mut g, 12);
    let lin = f.linear_interpolant();
    for &b in f.breakpoints() {
        assert_eq!(lin.evaluate(b).unwrap(), f.evaluate(b).unwrap());
    }
    let w = Window::new(1.0, f.t_max() - 0.5).unwrap();
    let r = f.restrict(w).unwrap();
    assert_eq!(r.window(), w);
    assert_eq!(sup_distance(&r, &f, w).unwrap(), 0.0);
}
