//! Randomized properties of the fields and the minimal-time machinery.

use gflame::field::{divergence_estimate, ensemble_seed, make_field, FieldFamily, FieldSpec};
use gflame::hj::{segment_time, Grid};
use gflame::homogenize::{min_time, MinTimeMethod};
use gflame::vecops::{norm, sub};
use proptest::prelude::*;

fn families() -> impl Strategy<Value = FieldSpec> {
    prop_oneof![
        (0.1f64..3.0).prop_map(FieldSpec::cellular),
        (0.1f64..3.0).prop_map(FieldSpec::shear),
        (0.1f64..1.5).prop_map(|a| FieldSpec::new(FieldFamily::default_random_phase(a))),
        (0.2f64..1.0, 0.2f64..0.6, 0.1f64..2.0).prop_map(|(l, r, a)| FieldSpec::poisson_bumps(l, r, a)),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn fields_are_divergence_free_and_bounded(
        spec in families(), seed in any::<u64>(), x in prop::array::uniform2(-20.0f64..20.0)
    ) {
        let f = make_field::<2>(&spec, seed).unwrap();
        let v = f.eval(&x);
        prop_assert!(norm(&v) <= f.v_max() * (1.0 + 1e-9) + 1e-12);
        let div = divergence_estimate(&f, &x, 1e-4);
        prop_assert!(div.abs() <= 1e-5 * (1.0 + f.lipschitz()), "div {div}");
    }

    #[test]
    fn realizations_are_reproducible(spec in families(), seed in any::<u64>(), x in prop::array::uniform2(-5.0f64..5.0)) {
        let a = make_field::<2>(&spec, seed).unwrap();
        let b = make_field::<2>(&spec, seed).unwrap();
        prop_assert_eq!(a.eval(&x), b.eval(&x));
    }

    #[test]
    fn segment_time_is_the_first_reachable_time(
        d in prop::array::uniform2(-3.0f64..3.0), v in prop::array::uniform2(-0.7f64..0.7)
    ) {
        prop_assume!(norm(&d) > 1e-3);
        let t = segment_time(&d, &v);
        // the unit control d / t - v is admissible and saturated
        let w: [f64; 2] = std::array::from_fn(|i| d[i] - t * v[i]);
        prop_assert!((norm(&w) - t).abs() <= 1e-9 * (1.0 + t));
        prop_assert!(t >= norm(&d) / (1.0 + norm(&v)) - 1e-12);
        prop_assert!(t <= norm(&d) / (1.0 - norm(&v)) + 1e-12);
    }

    #[test]
    fn ensemble_seeds_do_not_collide(master in any::<u64>(), i in 0u64..1000, j in 0u64..1000) {
        prop_assume!(i != j);
        prop_assert_ne!(ensemble_seed(master, i), ensemble_seed(master, j));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    /// Under a constant drift the minimal time is the straight-line time.
    #[test]
    fn graph_solver_matches_constant_drift(c in prop::array::uniform2(-0.6f64..0.6)) {
        let h = 0.05;
        let field = make_field::<2>(&FieldSpec::constant(c.to_vec()), 0).unwrap();
        let grid = Grid::<2>::open(h, 1.0).unwrap();
        let solve = min_time(&field, [0.0, 0.0], &grid, MinTimeMethod::Graph { rho: 6 }, Vec::new(), None).unwrap();
        let trusted = solve.trusted_time(field.speed_bound());
        for i in 0..grid.len() {
            let y = grid.point(i);
            if let Some(t) = solve.theta.get(i).filter(|t| *t <= trusted) {
                let exact = segment_time(&sub(&y, &[0.0, 0.0]), &c);
                prop_assert!((t - exact).abs() <= 2.0 * h, "y {:?}: {} vs {}", y, t, exact);
            }
        }
    }
}
