use approx::assert_relative_eq;
use coordwalk::bounds::{s_conductance_lower_bound, theorem_main_bound, BoundParams};
use coordwalk::geometry::{chord, chord_axis, random_polytope, uniform_sample};
use coordwalk::harness::{body_spec_to_toml, parse_body_spec};
use coordwalk::mixture::{enumerate_multi_indices, gaussian_tv_equal_cov, non_full_rank_mass, non_full_rank_mass_exact, pinsker_bound, MultiIndex};
use coordwalk::schemes::{run_chains, ChainStart, Scheme, WarmStart};
use coordwalk::{seed, ConvexBody};
use proptest::prelude::*;
use rand::Rng;

fn main_bound(n: u64, r: f64, m: f64, eps: f64) -> f64 {
    theorem_main_bound(&BoundParams::new(n, r, m, eps).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn main_bound_is_monotone(n in 2u64..200, r in 1.0f64..10.0, m in 1.0f64..10.0, eps in 0.01f64..0.45) {
        let k = main_bound(n, r, m, eps);
        prop_assert!(main_bound(n + 1, r, m, eps) >= k);
        prop_assert!(main_bound(n, r * 1.5, m, eps) >= k);
        prop_assert!(main_bound(n, r, m * 1.5, eps) >= k);
        prop_assert!(main_bound(n, r, m, eps * 0.9) >= k);
    }

    #[test]
    fn s_conductance_bound_shape(n in 2u64..10_000, s in 0.001f64..0.49, r in 1.0f64..20.0) {
        let phi = s_conductance_lower_bound(s, r, n, 1.0).unwrap();
        let ln = (n as f64).ln();
        assert_relative_eq!(phi * r * r * (n as f64).powf(3.5) * ln.powi(3), s * s, max_relative = 1e-12);
        prop_assert!(s_conductance_lower_bound(s / 2.0, r, n, 1.0).unwrap() < phi);
    }

    #[test]
    fn chords_are_maximal_and_convex(seed in any::<u64>(), n in 2usize..5) {
        let mut rng = seed::rng(seed, "chord-prop");
        let body = random_polytope(n, 3 * n, 3.0, &mut rng).unwrap();
        let x = uniform_sample(&body, &mut rng).unwrap();
        for axis in 0..n {
            let c = chord_axis(&body, &x, axis).unwrap();
            prop_assert!(c.t_lo <= 0.0 && c.t_hi >= 0.0);
            let at = |t: f64| {
                let mut y = x.clone();
                y[axis] += t;
                body.contains(&y).unwrap()
            };
            for _ in 0..100 {
                prop_assert!(at(rng.random_range(c.t_lo..=c.t_hi)));
            }
            prop_assert!(!at(c.t_hi + 1e-6) && !at(c.t_lo - 1e-6));
        }
        let mut d: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let norm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
        d.iter_mut().for_each(|v| *v /= norm);
        let c = chord(&body, &x, &d).unwrap();
        let y: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + (c.t_hi + 1e-6) * b).collect();
        prop_assert!(!body.contains(&y).unwrap());
    }

    #[test]
    fn gaussian_tv_below_pinsker(seed in any::<u64>(), n in 1usize..5, sigma in 0.01f64..1.0) {
        let mut rng = seed::rng(seed, "pinsker-prop");
        let u: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let counts: Vec<u64> = (0..n).map(|_| rng.random_range(1..6)).collect();
        let tau = counts.iter().sum();
        let idx = MultiIndex::new(counts, tau).unwrap();
        let tv = gaussian_tv_equal_cov(&v, &u, &idx, sigma).unwrap();
        prop_assert!((0.0..=1.0).contains(&tv));
        prop_assert!(tv <= pinsker_bound(&v, &u, sigma).unwrap() + 1e-12);
    }
}

#[test]
fn multi_index_weights_sum_to_one() {
    for (n, tau) in [(2, 4), (3, 6), (4, 9)] {
        let all: f64 = enumerate_multi_indices(n, tau, false).unwrap().map(|i| i.lambda()).sum();
        assert_relative_eq!(all, 1.0, max_relative = 1e-12);
        let full: f64 = enumerate_multi_indices(n, tau, true).unwrap().map(|i| i.lambda()).sum();
        assert_relative_eq!(1.0 - full, non_full_rank_mass_exact(n, tau).unwrap(), max_relative = 1e-9);
        assert!(non_full_rank_mass(n, tau).unwrap() >= non_full_rank_mass_exact(n, tau).unwrap() - 1e-12);
    }
}

#[test]
fn spec_round_trip_membership() {
    let mut rng = seed::rng(11, "round-trip");
    let bodies = vec![
        ConvexBody::boxed(vec![0.5, -0.5, 0.0], vec![1.0, 2.0, 0.5], 3.0).unwrap(),
        ConvexBody::ball(vec![0.1, 0.2, 0.3], 1.5, 2.0).unwrap(),
        ConvexBody::simplex(vec![-1.0, -1.0, -1.0], 3.0, 2.0).unwrap(),
        random_polytope(3, 8, 2.0, &mut rng).unwrap(),
    ];
    for body in bodies {
        let text = body_spec_to_toml(&body).unwrap();
        let back = parse_body_spec(&text).unwrap().body;
        let (lo, hi) = body.bounding_box();
        for _ in 0..10_000 {
            let x: Vec<f64> = lo.iter().zip(hi).map(|(l, h)| rng.random_range(l - 0.5..h + 0.5)).collect();
            assert_eq!(body.contains(&x).unwrap(), back.contains(&x).unwrap(), "{text}");
        }
    }
}

#[test]
fn chains_are_deterministic_per_seed() {
    let body = ConvexBody::cube(3, 1.0).unwrap();
    let start = ChainStart::Warm(WarmStart::new(&body, 4.0).unwrap());
    let run = |s| run_chains(&Scheme::CoordinateHitAndRun, &body, &start, 8, 50, s, "det", None).unwrap();
    let a = run(5);
    assert_eq!(a, run(5));
    assert_ne!(a, run(6));
}
