use driftwalk::bounds::speed_upper_bound;
use driftwalk::environment::{
    make_ceil_line_env, make_equally_spaced, make_explicit, make_finite_env, make_periodic,
    make_upsilon_env,
};
use driftwalk::quadratic::norm_constant;
use driftwalk::rational::{pow, ratio, to_f64};
use driftwalk::simulator::{
    coupled_run, estimate_speed, hitting_stats, hitting_time_samples, run_walk, speed_samples,
    WalkConfig,
};
use driftwalk::{Density, Environment, LineEnvironment, Probability, Rational};
use proptest::prelude::*;

fn prob(a: i64, b: i64) -> Probability {
    Probability::from_ratio(a, b).unwrap()
}

fn driftless() -> LineEnvironment {
    make_explicit(Vec::new(), prob(3, 4)).unwrap()
}

#[test]
fn driftless_walk_is_diffusive() {
    let steps = 1_000_000u64;
    let finals: Vec<f64> = speed_samples(&Environment::Line(driftless()), steps, 200, 21)
        .unwrap()
        .into_iter()
        .map(|v| v * steps as f64)
        .collect();
    let n = finals.len() as f64;
    let scaled: Vec<f64> = finals.iter().map(|x| x / (steps as f64).sqrt()).collect();
    let mean = scaled.iter().sum::<f64>() / n;
    assert!(mean.abs() <= 3.0 / n.sqrt(), "mean {mean}");
    let var = finals.iter().map(|x| x * x).sum::<f64>() / n;
    // Sample second moment of 200 draws: relative sd about 0.1.
    assert!(
        (var / steps as f64 - 1.0).abs() < 0.35,
        "variance ratio {}",
        var / steps as f64
    );
}

#[test]
fn driftless_segment_of_two_hits_in_four_on_average() {
    let env = make_finite_env(2, prob(3, 4), &[]).unwrap();
    let stats = hitting_stats(&hitting_time_samples(&env, 100_000, 5, 1_000_000_000));
    assert_eq!(stats.capped, 0);
    let m = stats.moments;
    assert!(
        (m.mean - 4.0).abs() <= 3.0 * m.stderr,
        "{} ± {}",
        m.mean,
        m.stderr
    );
    // Var T = 24 - 16 = 8.
    assert!((m.sd * m.sd - 8.0).abs() < 0.3, "variance {}", m.sd * m.sd);
}

#[test]
fn trajectories_are_reproducible() {
    let env = Environment::Line(make_ceil_line_env(prob(3, 4), ratio(1, 3)).unwrap());
    let mut cfg = WalkConfig::steps(env, 10_000, 77);
    cfg.record_path = true;
    let a = run_walk(&cfg).unwrap();
    let b = run_walk(&cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.path.as_ref().unwrap().len(), 10_001);
}

/// `(env, (2p-1)λ)` pairs used by the speed checks.
fn speed_cases() -> Vec<(Environment, Rational)> {
    let mut out = Vec::new();
    for (a, b) in [(3, 5), (3, 4), (9, 10)] {
        let p = prob(a, b);
        for m in [2u64, 3] {
            let bound = speed_upper_bound(&p, &ratio(1, m as i64)).unwrap();
            out.push((
                Environment::Line(make_equally_spaced(m, p.clone()).unwrap()),
                bound,
            ));
        }
        let lambda = ratio(2, 5);
        let bound = speed_upper_bound(&p, &lambda).unwrap();
        out.push((
            Environment::Line(make_ceil_line_env(p.clone(), lambda).unwrap()),
            bound,
        ));
    }
    let lambda = ratio(2, 5);
    out.push((
        Environment::Line(
            make_upsilon_env(
                2,
                &Density::new(lambda.clone()).unwrap(),
                Probability::one(),
            )
            .unwrap(),
        ),
        speed_upper_bound(&Probability::one(), &lambda).unwrap(),
    ));
    out
}

#[test]
fn speed_never_exceeds_bound_beyond_noise() {
    for (i, (env, bound)) in speed_cases().into_iter().enumerate() {
        let est = estimate_speed(&env, 1_000_000, 20, 300 + i as u64).unwrap();
        let cap = to_f64(&bound) * (1.0 + 5.0 * est.stderr / est.mean);
        assert!(est.mean <= cap, "case {i}: {} > {cap}", est.mean);
    }
}

#[test]
fn ceiling_construction_speed_is_within_cubic_gap() {
    for (a, b) in [(3, 5), (3, 4), (9, 10), (1, 1)] {
        let p = prob(a, b);
        for lambda in [ratio(1, 10), ratio(1, 4), ratio(2, 5)] {
            let env = Environment::Line(make_ceil_line_env(p.clone(), lambda.clone()).unwrap());
            let s = p.value() * ratio(2, 1) - ratio(1, 1);
            let d = norm_constant(&p) * &s * &s;
            let floor = speed_upper_bound(&p, &lambda).unwrap() - d * pow(&lambda, 3);
            let est = estimate_speed(&env, 1_000_000, 20, 900).unwrap();
            assert!(
                est.mean + 3.0 * est.stderr >= to_f64(&floor),
                "p={p}, λ={lambda}: {} below {}",
                est.mean,
                to_f64(&floor)
            );
        }
    }
}

#[test]
fn coupling_driftless_under_equally_spaced() {
    let upper = make_equally_spaced(2, Probability::one()).unwrap();
    for seed in 0..10 {
        let run = coupled_run(&driftless(), &upper, 20_000, seed).unwrap();
        assert!(run.dominated);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn coupling_dominates_pathwise(
        period in 1u64..12,
        lower_mask in any::<u64>(),
        upper_extra in any::<u64>(),
        pi in 0usize..4,
        seed in any::<u64>(),
    ) {
        let (a, b) = [(3, 5), (3, 4), (9, 10), (1, 1)][pi];
        let lower_offsets: std::collections::BTreeSet<u64> =
            (0..period).filter(|o| lower_mask >> o & 1 == 1).collect();
        let upper_offsets = (0..period)
            .filter(|o| lower_offsets.contains(o) || upper_extra >> o & 1 == 1)
            .collect();
        let lower = make_periodic(period, lower_offsets, prob(a, b)).unwrap();
        let upper = make_periodic(period, upper_offsets, prob(a, b)).unwrap();
        let run = coupled_run(&lower, &upper, 5_000, seed).unwrap();
        prop_assert!(run.dominated);
        prop_assert!(run.upper_path.iter().zip(&run.lower_path).all(|(u, l)| u >= l));
    }
}
