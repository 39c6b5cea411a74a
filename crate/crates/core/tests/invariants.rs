//! Property tests for structural invariants: draw functional symmetries and
//! monotonicity, greedy count monotonicity, ruin probability shape, hitting
//! time additivity, detailed balance, and determinism of seeded sampling.

use driftwalk_core::environment::{sample_environment, Disorder, EnvSpec};
use driftwalk_core::exactsolve::{
    detailed_balance_max_deviation, expected_hit, reversible_measure_log, ruin_prob,
};
use driftwalk_core::numeric::{logaddexp, LogWeight};
use driftwalk_core::pathfunc::{
    drawdown, drawup, interval_stats, max_threshold_segments, DrawDirection, ScaleParams,
};
use driftwalk_core::rng::derive_seed;
use proptest::prelude::*;

fn disorder_strategy() -> impl Strategy<Value = Disorder> {
    prop_oneof![
        (0.2..3.0f64).prop_map(|c| Disorder::Rademacher { c }),
        (0.2..3.0f64).prop_map(|half_width| Disorder::CenteredUniform { half_width }),
        (0.2..2.0f64).prop_map(|std_dev| Disorder::Gaussian { std_dev }),
        (0.1..0.9f64, 0.2..2.0f64).prop_map(|(p, up)| {
            // Mean-zero by construction: down = -p·up/(1-p).
            let down = -p * up / (1.0 - p);
            Disorder::TwoPoint { p, up, down }
        }),
    ]
}

fn spec_strategy() -> impl Strategy<Value = EnvSpec> {
    (disorder_strategy(), 0.05..0.45f64, 0.2..3.0f64, 20..150usize).prop_map(
        |(disorder, alpha, b, n_sites)| EnvSpec {
            disorder,
            alpha,
            b,
            n_sites,
            theta0_check: 0.25,
        },
    )
}

fn walk_strategy() -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-10.0..10.0f64, 2..120).prop_map(|steps| {
        let mut acc = 0.0;
        steps
            .into_iter()
            .map(|s| {
                acc += s;
                acc
            })
            .collect()
    })
}

proptest! {
    #[test]
    fn draws_are_nonnegative_and_mirror_symmetric(v in walk_strategy()) {
        let du = drawup(&v).unwrap();
        let dd = drawdown(&v).unwrap();
        prop_assert!(du >= 0.0 && dd >= 0.0);
        let reversed: Vec<f64> = v.iter().rev().cloned().collect();
        prop_assert_eq!(du, drawdown(&reversed).unwrap());
        let negated: Vec<f64> = v.iter().map(|x| -x).collect();
        prop_assert_eq!(dd, drawup(&negated).unwrap());
    }

    #[test]
    fn draws_grow_under_interval_inclusion(
        v in walk_strategy(),
        cut in 0usize..40,
    ) {
        let hi = v.len() - 1;
        let lo = cut.min(hi.saturating_sub(1));
        let inner = interval_stats(&v, lo, hi).unwrap();
        let outer = interval_stats(&v, 0, hi).unwrap();
        prop_assert!(outer.drawup >= inner.drawup);
        prop_assert!(outer.drawdown >= inner.drawdown);
        prop_assert!(outer.range_max >= inner.range_max);
    }

    #[test]
    fn greedy_count_is_monotone_in_the_threshold(
        v in walk_strategy(),
        th in 0.0..20.0f64,
        bump in 0.01..5.0f64,
    ) {
        for dir in [DrawDirection::Rise, DrawDirection::Fall] {
            let at = max_threshold_segments(&v, th, dir);
            let above = max_threshold_segments(&v, th + bump, dir);
            prop_assert!(above <= at, "raising the threshold cannot create segments");
        }
    }

    #[test]
    fn logaddexp_is_commutative_shifted_and_dominating(
        a in -600.0..600.0f64,
        b in -600.0..600.0f64,
        shift in -200.0..200.0f64,
    ) {
        prop_assert_eq!(logaddexp(a, b), logaddexp(b, a));
        let base = logaddexp(a, b);
        prop_assert!(base >= a.max(b));
        prop_assert!(base <= a.max(b) + std::f64::consts::LN_2 + 1e-14);
        let shifted = logaddexp(a + shift, b + shift);
        prop_assert!((shifted - (base + shift)).abs() <= 1e-10);
    }

    #[test]
    fn log_weight_algebra_tracks_natural_arithmetic(
        x in 1e-6..1e6f64,
        y in 1e-6..1e6f64,
    ) {
        let lx = LogWeight::from_value(x).unwrap();
        let ly = LogWeight::from_value(y).unwrap();
        let prod = (lx * ly).value().unwrap();
        prop_assert!((prod - x * y).abs() <= 1e-12 * (x * y));
        let sum = (lx + ly).value().unwrap();
        prop_assert!((sum - (x + y)).abs() <= 1e-12 * (x + y));
        let ratio = (lx / ly).value().unwrap();
        prop_assert!((ratio - x / y).abs() <= 1e-12 * (x / y));
    }

    #[test]
    fn derived_seeds_differ_across_indices(root in any::<u64>(), i in 0u64..1000, j in 0u64..1000) {
        prop_assume!(i != j);
        prop_assert_ne!(derive_seed(root, 3, i), derive_seed(root, 3, j));
    }

    #[test]
    fn localization_scale_is_increasing(
        alpha in 0.05..0.45f64,
        b in 0.2..3.0f64,
        sigma in 0.3..2.0f64,
        t in 20.0..1e9f64,
        factor in 1.1..50.0f64,
    ) {
        let p = ScaleParams::new(alpha, b, sigma).unwrap();
        let s1 = p.localization_scale(t).unwrap();
        let s2 = p.localization_scale(t * factor).unwrap();
        prop_assert!(s2 > s1, "scale must grow with the horizon: {} vs {}", s1, s2);
        prop_assert!(p.scale_constant() > 0.0);
    }
}

proptest! {
    // Environment-backed properties are costlier; fewer, larger cases.
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn sampling_is_reproducible(spec in spec_strategy(), seed in any::<u64>()) {
        let a = sample_environment(&spec, seed).unwrap();
        let b = sample_environment(&spec, seed).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn ruin_probability_shape(spec in spec_strategy(), seed in any::<u64>()) {
        let env = sample_environment(&spec, seed).unwrap();
        let c = env.n_sites();
        prop_assert_eq!(ruin_prob(&env, 0, 0, c).unwrap(), 0.0);
        prop_assert_eq!(ruin_prob(&env, 0, c, c).unwrap(), 1.0);
        let mut last = 0.0;
        for x in 0..=c {
            let p = ruin_prob(&env, 0, x, c).unwrap();
            prop_assert!((0.0..=1.0).contains(&p));
            prop_assert!(p >= last, "ruin must be nondecreasing in the start");
            last = p;
        }
    }

    #[test]
    fn expected_hit_is_additive(spec in spec_strategy(), seed in any::<u64>()) {
        let env = sample_environment(&spec, seed).unwrap();
        let n = env.n_sites();
        let (x, y, z) = (0, n / 3 + 1, n.max(3));
        prop_assume!(x < y && y < z);
        match (expected_hit(&env, x, z), expected_hit(&env, x, y), expected_hit(&env, y, z)) {
            (Ok(full), Ok(first), Ok(second)) => {
                prop_assert!(
                    (full - (first + second)).abs() <= 1e-11 * full,
                    "additivity: {} vs {} + {}", full, first, second
                );
            }
            // A barrier outside f64 range in any piece exempts the triple.
            _ => {}
        }
    }

    #[test]
    fn detailed_balance_holds_for_every_family(spec in spec_strategy(), seed in any::<u64>()) {
        let env = sample_environment(&spec, seed).unwrap();
        let dev = detailed_balance_max_deviation(&env, env.n_sites()).unwrap();
        prop_assert!(dev <= 1e-12, "deviation {}", dev);
    }

    #[test]
    fn reversible_measure_interlaces_the_potential(spec in spec_strategy(), seed in any::<u64>()) {
        // π(x) = e^{-U(x)} + e^{-U(x-1)} lies between the larger summand and
        // twice it.
        let env = sample_environment(&spec, seed).unwrap();
        for x in 1..=env.n_sites() {
            let bigger = (-env.u(x).unwrap()).max(-env.u(x - 1).unwrap());
            let log_pi = reversible_measure_log(&env, x).unwrap().ln();
            prop_assert!(log_pi >= bigger - 1e-12);
            prop_assert!(log_pi <= bigger + std::f64::consts::LN_2 + 1e-12);
        }
    }
}
