use driftwalk::environment::{
    make_ceil_env, make_ceil_line_env, make_periodic, make_upsilon_env, upsilon_pattern,
};
use driftwalk::rational::{int, ratio, to_f64};
use driftwalk::{Density, Probability, Rational};
use proptest::prelude::*;

const TEST_PS: [(i64, i64); 4] = [(3, 5), (3, 4), (9, 10), (1, 1)];

fn prob(i: usize) -> Probability {
    let (a, b) = TEST_PS[i];
    Probability::from_ratio(a, b).unwrap()
}

/// `|density_prefix(n) - λ| <= c / n` at `n = 10², 10³, 10⁴`.
fn assert_density_converges(env: &driftwalk::LineEnvironment, lambda: &Rational, c: f64) {
    for n in [100u64, 1_000, 10_000] {
        let err = (to_f64(&env.density_prefix(n)) - to_f64(lambda)).abs();
        assert!(err <= c / n as f64, "n={n}: error {err}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn periodic_density_converges(period in 1u64..40, mask in any::<u64>(), pi in 0usize..4) {
        let offsets: std::collections::BTreeSet<u64> = (0..period).filter(|o| mask >> o & 1 == 1).collect();
        let lambda = ratio(offsets.len() as i64, period as i64);
        let env = make_periodic(period, offsets, prob(pi)).unwrap();
        assert_density_converges(&env, &lambda, period as f64 + 1.0);
    }

    #[test]
    fn ceil_density_converges(a in 1i64..30, extra in 0i64..30, pi in 0usize..4) {
        let lambda = ratio(a, a + extra);
        let env = make_ceil_line_env(prob(pi), lambda.clone()).unwrap();
        // Offset shift (1-p)/(2p-1) moves at most a few drifts across 0.
        assert_density_converges(&env, &lambda, 4.0);
    }

    #[test]
    fn ceil_positions_strictly_increase(a in 1i64..50, extra in 0i64..50, pi in 0usize..4) {
        let l = make_ceil_env(&prob(pi), &ratio(a, a + extra), 200).unwrap();
        prop_assert!(l.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn upsilon_lengths_and_density(m in 1u64..8, n in 1i64..20, l in 0i64..20) {
        let l = l % (n + 1);
        let lambda = ratio(n, m as i64 * n + l);
        let pattern = upsilon_pattern(m, &lambda).unwrap();
        prop_assert!(pattern.iter().all(|&x| x == m || x == m + 1));
        let env = make_upsilon_env(m, &Density::new(lambda.clone()).unwrap(), Probability::one()).unwrap();
        assert_density_converges(&env, &lambda, (m * n as u64 + l as u64) as f64 + 1.0);
        let sites = env.drift_sites(-200, 200);
        prop_assert!(sites.windows(2).all(|w| w[1] - w[0] == m as i64 || w[1] - w[0] == m as i64 + 1));
    }

    #[test]
    fn shift_composes(a in -500i64..500, b in -500i64..500, pi in 0usize..4) {
        let envs = [
            make_ceil_line_env(prob(pi), ratio(2, 7)).unwrap(),
            make_upsilon_env(2, &Density::new(ratio(2, 5)).unwrap(), Probability::one()).unwrap(),
            make_periodic(6, [1, 4].into_iter().collect(), prob(pi)).unwrap(),
        ];
        for env in &envs {
            let two = env.shift(a).shift(b);
            let one = env.shift(a + b);
            for x in -30..30 {
                prop_assert_eq!(two.prob(x), one.prob(x));
                prop_assert_eq!(two.prob(x), env.prob(x + a + b));
            }
        }
    }
}

#[test]
fn density_prefix_counts_origin() {
    let env = make_periodic(4, [0].into_iter().collect(), prob(1)).unwrap();
    assert_eq!(env.density_prefix(3), ratio(1, 4));
    assert_eq!(env.density_prefix(4), ratio(2, 5));
    assert_eq!(env.density_prefix(0), int(1));
}
