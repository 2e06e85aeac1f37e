//! Seeded Monte Carlo for walks in fixed environments.
//!
//! Each step draws a 53-bit integer `u` and moves right iff
//! `u < threshold(x)`, which is the exact comparison `U < ω(x)` for the
//! dyadic uniform `U = u / 2^53`. Replica `r` under master seed `s` uses the
//! stream [`rng::stream_rng`]`(s, r)`.

use std::collections::HashSet;

use rand::{RngCore, SeedableRng};
use rayon::prelude::*;

use crate::environment::{
    sample_iid_env, Density, Environment, FiniteEnvironment, LineEnvironment, Probability,
};
use crate::error::{invalid, Error, Result};
use crate::rational;
use crate::rng::{self, WalkRng};

pub const DEFAULT_CAP: u64 = 1_000_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopRule {
    Steps(u64),
    /// Stop on first visit to the site; gives up after `cap` steps.
    Target(i64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct WalkConfig {
    pub env: Environment,
    pub start: i64,
    pub stop: StopRule,
    pub seed: u64,
    pub cap: u64,
    pub record_path: bool,
}

impl WalkConfig {
    pub fn steps(env: Environment, steps: u64, seed: u64) -> Self {
        Self {
            env,
            start: 0,
            stop: StopRule::Steps(steps),
            seed,
            cap: DEFAULT_CAP,
            record_path: false,
        }
    }

    pub fn target(env: Environment, target: i64, seed: u64) -> Self {
        Self {
            env,
            start: 0,
            stop: StopRule::Target(target),
            seed,
            cap: DEFAULT_CAP,
            record_path: false,
        }
    }
}

/// Site-to-threshold lookup for either environment shape.
enum Sites<'a> {
    Line(&'a LineEnvironment),
    Finite { thresholds: Vec<u64>, n: i64 },
}

impl<'a> Sites<'a> {
    fn new(env: &'a Environment) -> Self {
        match env {
            Environment::Line(line) => Sites::Line(line),
            Environment::Finite(fin) => Sites::from_finite(fin),
        }
    }

    fn from_finite(env: &FiniteEnvironment) -> Sites<'static> {
        Sites::Finite {
            thresholds: env.thresholds(),
            n: env.len() as i64,
        }
    }

    #[inline]
    fn threshold(&self, x: i64) -> u64 {
        match self {
            Sites::Line(env) => env.threshold(x),
            Sites::Finite { thresholds, .. } => thresholds[x as usize],
        }
    }

    fn absorbing(&self) -> Option<i64> {
        match self {
            Sites::Line(_) => None,
            Sites::Finite { n, .. } => Some(*n),
        }
    }

    fn check_start(&self, start: i64) -> Result<()> {
        match self {
            Sites::Finite { n, .. } if start < 0 || start > *n => Err(invalid(format!(
                "start {start} outside the segment [0, {n}]"
            ))),
            _ => Ok(()),
        }
    }
}

#[inline]
fn step(rng: &mut WalkRng, threshold: u64) -> i64 {
    if rng::draw53(rng.next_u64()) < threshold {
        1
    } else {
        -1
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WalkSummary {
    pub final_position: i64,
    pub min: i64,
    pub max: i64,
    pub steps_taken: u64,
    /// First step index at the target, for target runs that reached it.
    pub hit: Option<u64>,
    pub path: Option<Vec<i64>>,
}

pub fn run_walk(config: &WalkConfig) -> Result<WalkSummary> {
    let sites = Sites::new(&config.env);
    sites.check_start(config.start)?;
    let mut rng = WalkRng::seed_from_u64(config.seed);
    let (limit, target) = match config.stop {
        StopRule::Steps(n) => (n, None),
        StopRule::Target(t) => (config.cap, Some(t)),
    };
    let absorbing = sites.absorbing();
    let mut x = config.start;
    let (mut min, mut max) = (x, x);
    let mut path = config.record_path.then(|| vec![x]);
    let mut hit = (target == Some(x)).then_some(0);
    let mut taken = 0;
    while hit.is_none() && taken < limit && Some(x) != absorbing {
        x += step(&mut rng, sites.threshold(x));
        taken += 1;
        min = min.min(x);
        max = max.max(x);
        if let Some(p) = path.as_mut() {
            p.push(x);
        }
        if target == Some(x) {
            hit = Some(taken);
        }
    }
    Ok(WalkSummary {
        final_position: x,
        min,
        max,
        steps_taken: taken,
        hit,
        path,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HittingSample {
    Hit(u64),
    CapExceeded,
}

impl HittingSample {
    pub fn value(&self) -> Option<u64> {
        match self {
            HittingSample::Hit(t) => Some(*t),
            HittingSample::CapExceeded => None,
        }
    }
}

pub fn sample_hitting_time(config: &WalkConfig) -> Result<HittingSample> {
    if !matches!(config.stop, StopRule::Target(_)) {
        return Err(invalid("hitting-time sampling needs a target stop rule"));
    }
    Ok(match run_walk(config)?.hit {
        Some(t) => HittingSample::Hit(t),
        None => HittingSample::CapExceeded,
    })
}

/// Hitting time of `N` from `0` in a reflected segment, with a fast inner
/// loop over the precomputed thresholds.
fn finite_hitting(thresholds: &[u64], n: usize, rng: &mut WalkRng, cap: u64) -> HittingSample {
    let mut x = 0usize;
    let mut t = 0u64;
    while x != n {
        if t == cap {
            return HittingSample::CapExceeded;
        }
        if rng::draw53(rng.next_u64()) < thresholds[x] {
            x += 1;
        } else {
            x -= 1;
        }
        t += 1;
    }
    HittingSample::Hit(t)
}

/// `T_N` from `0` for `reps` replicas, in replica order.
pub fn hitting_time_samples(
    env: &FiniteEnvironment,
    reps: u64,
    seed: u64,
    cap: u64,
) -> Vec<HittingSample> {
    let thresholds = env.thresholds();
    let n = env.len() as usize;
    (0..reps)
        .into_par_iter()
        .map(|r| finite_hitting(&thresholds, n, &mut rng::stream_rng(seed, r), cap))
        .collect()
}

/// Sample mean with `stderr = sd / √reps` (sample sd, `n - 1` divisor).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Moments {
    pub count: u64,
    pub mean: f64,
    pub sd: f64,
    pub stderr: f64,
}

impl Moments {
    pub fn from_samples(values: &[f64]) -> Self {
        let count = values.len() as u64;
        if count == 0 {
            return Self {
                count,
                mean: f64::NAN,
                sd: f64::NAN,
                stderr: f64::NAN,
            };
        }
        let n = count as f64;
        let mean = values.iter().sum::<f64>() / n;
        let sd = if count > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self {
            count,
            mean,
            sd,
            stderr: sd / n.sqrt(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HittingStats {
    /// Moments over the samples that hit; capped ones are excluded here.
    pub moments: Moments,
    pub capped: u64,
}

pub fn hitting_stats(samples: &[HittingSample]) -> HittingStats {
    let hits: Vec<f64> = samples
        .iter()
        .filter_map(|s| s.value())
        .map(|t| t as f64)
        .collect();
    HittingStats {
        capped: samples.len() as u64 - hits.len() as u64,
        moments: Moments::from_samples(&hits),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpeedEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub reps: u64,
    pub steps: u64,
    pub seed: u64,
}

impl SpeedEstimate {
    pub fn from_samples(values: &[f64], steps: u64, seed: u64) -> Self {
        let m = Moments::from_samples(values);
        Self {
            mean: m.mean,
            stderr: m.stderr,
            reps: m.count,
            steps,
            seed,
        }
    }

    /// `|mean - target| <= z · stderr`.
    pub fn within(&self, target: f64, z: f64) -> bool {
        (self.mean - target).abs() <= z * self.stderr
    }
}

fn check_speed_args(steps: u64, reps: u64) -> Result<()> {
    if steps == 0 || reps == 0 {
        return Err(invalid("steps and reps must both be at least 1"));
    }
    Ok(())
}

/// `X_steps / steps` per replica, in replica order.
pub fn speed_samples(env: &Environment, steps: u64, reps: u64, seed: u64) -> Result<Vec<f64>> {
    check_speed_args(steps, reps)?;
    let sites = Sites::new(env);
    let absorbing = sites.absorbing();
    Ok((0..reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng::stream_rng(seed, r);
            let mut x = 0i64;
            for _ in 0..steps {
                if Some(x) == absorbing {
                    break;
                }
                x += step(&mut rng, sites.threshold(x));
            }
            x as f64 / steps as f64
        })
        .collect())
}

pub fn estimate_speed(
    env: &Environment,
    steps: u64,
    reps: u64,
    seed: u64,
) -> Result<SpeedEstimate> {
    let values = speed_samples(env, steps, reps, seed)?;
    Ok(SpeedEstimate::from_samples(&values, steps, seed))
}

/// Annealed speed samples: replica `r` walks in its own i.i.d. environment
/// keyed by `derive_seed(seed ^ ENV_STREAM, r)`.
pub fn iid_speed_samples(
    p: &Probability,
    lambda: &Density,
    steps: u64,
    reps: u64,
    seed: u64,
) -> Result<Vec<f64>> {
    check_speed_args(steps, reps)?;
    const ENV_STREAM: u64 = 0x6976_6964_656e_7673;
    let window = (-4096, steps as i64 + 1);
    (0..reps)
        .into_par_iter()
        .map(|r| {
            let env = sample_iid_env(
                p.clone(),
                lambda,
                window,
                rng::derive_seed(seed ^ ENV_STREAM, r),
            )?;
            let mut rng = rng::stream_rng(seed, r);
            let mut x = 0i64;
            for _ in 0..steps {
                x += step(&mut rng, env.threshold(x));
            }
            Ok(x as f64 / steps as f64)
        })
        .collect()
}

pub fn estimate_iid_speed(
    p: &Probability,
    lambda: &Density,
    steps: u64,
    reps: u64,
    seed: u64,
) -> Result<SpeedEstimate> {
    let values = iid_speed_samples(p, lambda, steps, reps, seed)?;
    Ok(SpeedEstimate::from_samples(&values, steps, seed))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoupledRun {
    pub lower_path: Vec<i64>,
    pub upper_path: Vec<i64>,
    /// `upper_path[n] >= lower_path[n]` for every `n`.
    pub dominated: bool,
}

/// Runs both walks on one uniform sequence. Every newly visited site is
/// checked for `lower(x) <= upper(x)` in exact arithmetic.
pub fn coupled_run(
    lower: &LineEnvironment,
    upper: &LineEnvironment,
    steps: u64,
    seed: u64,
) -> Result<CoupledRun> {
    let mut rng = WalkRng::seed_from_u64(seed);
    let mut checked = HashSet::new();
    let mut check = |x: i64| -> Result<()> {
        if checked.insert(x) {
            let (lo, hi) = (lower.prob(x), upper.prob(x));
            if lo > hi {
                return Err(Error::OrderViolation {
                    site: x,
                    lower: rational::format(&lo),
                    upper: rational::format(&hi),
                });
            }
        }
        Ok(())
    };
    let (mut a, mut b) = (0i64, 0i64);
    let mut lower_path = Vec::with_capacity(steps as usize + 1);
    let mut upper_path = Vec::with_capacity(steps as usize + 1);
    lower_path.push(a);
    upper_path.push(b);
    let mut dominated = true;
    for _ in 0..steps {
        check(a)?;
        check(b)?;
        let u = rng::draw53(rng.next_u64());
        a += if u < lower.threshold(a) { 1 } else { -1 };
        b += if u < upper.threshold(b) { 1 } else { -1 };
        dominated &= b >= a;
        lower_path.push(a);
        upper_path.push(b);
    }
    Ok(CoupledRun {
        lower_path,
        upper_path,
        dominated,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TransienceVerdict {
    /// The last term is below [`TERM_FLOOR`].
    FiniteLooking,
    /// The last term is at least [`TERM_FLOOR`] and at least half the term
    /// at mid-depth, so partial sums still grow about linearly.
    DivergentLooking,
    Inconclusive,
}

pub const TERM_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct TransienceReport {
    /// `Σ_{n<=d} Π_{j<=n} ρ(j)` for `d = 1..=depth`.
    pub partial_sums: Vec<f64>,
    pub verdict: TransienceVerdict,
}

/// Partial sums of `S(ω) = Σ_n Π_{j=1..n} (1 - ω(j)) / ω(j)`. A diagnostic:
/// the verdict only describes the computed prefix.
pub fn transience_stat(env: &LineEnvironment, depth: usize) -> Result<TransienceReport> {
    if depth == 0 {
        return Err(invalid("depth must be at least 1"));
    }
    let mut partial_sums = Vec::with_capacity(depth);
    let mut terms = Vec::with_capacity(depth);
    let (mut product, mut sum) = (1.0f64, 0.0f64);
    for j in 1..=depth as i64 {
        let w = env.prob(j);
        product *= rational::to_f64(&(crate::rational::int(1) - &w)) / rational::to_f64(&w);
        sum += product;
        terms.push(product);
        partial_sums.push(sum);
    }
    let last = terms[depth - 1];
    let mid = terms[(depth - 1) / 2];
    let verdict = if last < TERM_FLOOR {
        TransienceVerdict::FiniteLooking
    } else if last >= 0.5 * mid {
        TransienceVerdict::DivergentLooking
    } else {
        TransienceVerdict::Inconclusive
    };
    Ok(TransienceReport {
        partial_sums,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::{make_equally_spaced, make_explicit, make_finite_env};
    use std::collections::BTreeMap;

    fn prob(n: i64, d: i64) -> Probability {
        Probability::from_ratio(n, d).unwrap()
    }

    fn driftless() -> LineEnvironment {
        make_explicit(BTreeMap::new(), Probability::from_ratio(3, 4).unwrap()).unwrap()
    }

    #[test]
    fn all_drift_p_one_moves_right_every_step() {
        let env = Environment::Line(make_equally_spaced(1, Probability::one()).unwrap());
        let out = run_walk(&WalkConfig::steps(env.clone(), 100, 3)).unwrap();
        assert_eq!((out.final_position, out.min, out.max), (100, 0, 100));
        let est = estimate_speed(&env, 1000, 4, 9).unwrap();
        assert_eq!((est.mean, est.stderr), (1.0, 0.0));
    }

    #[test]
    fn same_seed_same_path() {
        let env = Environment::Line(driftless());
        let mut cfg = WalkConfig::steps(env, 500, 42);
        cfg.record_path = true;
        assert_eq!(run_walk(&cfg).unwrap(), run_walk(&cfg).unwrap());
        cfg.seed = 43;
        let other = run_walk(&cfg).unwrap();
        cfg.seed = 42;
        assert_ne!(run_walk(&cfg).unwrap().path, other.path);
    }

    #[test]
    fn deterministic_segment_hits_in_two() {
        let env = Environment::Finite(make_finite_env(2, Probability::one(), &[1]).unwrap());
        for seed in 0..20 {
            let t = sample_hitting_time(&WalkConfig::target(env.clone(), 2, seed)).unwrap();
            assert_eq!(t, HittingSample::Hit(2));
        }
    }

    #[test]
    fn cap_is_reported_not_dropped() {
        let env = Environment::Finite(make_finite_env(4, prob(3, 4), &[]).unwrap());
        let mut cfg = WalkConfig::target(env, 4, 1);
        cfg.cap = 1;
        assert_eq!(
            sample_hitting_time(&cfg).unwrap(),
            HittingSample::CapExceeded
        );
        let fin = make_finite_env(4, prob(3, 4), &[]).unwrap();
        let stats = hitting_stats(&hitting_time_samples(&fin, 50, 1, 3));
        assert_eq!(stats.capped, 50);
    }

    #[test]
    fn step_rule_needs_target_for_hitting() {
        let env = Environment::Line(driftless());
        assert!(sample_hitting_time(&WalkConfig::steps(env, 10, 0)).is_err());
    }

    #[test]
    fn replicas_do_not_depend_on_thread_count() {
        let env = Environment::Line(driftless());
        let a = speed_samples(&env, 200, 64, 5).unwrap();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(3)
            .build()
            .unwrap();
        let b = pool.install(|| speed_samples(&env, 200, 64, 5).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn identical_environments_couple_identically() {
        let env = make_equally_spaced(3, prob(3, 4)).unwrap();
        let run = coupled_run(&env, &env, 2000, 11).unwrap();
        assert_eq!(run.lower_path, run.upper_path);
        assert!(run.dominated);
    }

    #[test]
    fn order_violation_names_the_site() {
        let mut sites = BTreeMap::new();
        sites.insert(0, prob(3, 4));
        let high = make_explicit(sites, prob(3, 4)).unwrap();
        match coupled_run(&high, &driftless(), 10, 0) {
            Err(Error::OrderViolation { site, .. }) => assert_eq!(site, 0),
            other => panic!("expected an order violation, got {other:?}"),
        }
    }

    #[test]
    fn transience_examples() {
        let flat = transience_stat(&driftless(), 50).unwrap();
        assert_eq!(flat.partial_sums[49], 50.0);
        assert_eq!(flat.verdict, TransienceVerdict::DivergentLooking);

        let mut sites = BTreeMap::new();
        sites.insert(5, Probability::one());
        let wall = make_explicit(sites, Probability::one()).unwrap();
        let r = transience_stat(&wall, 40).unwrap();
        assert!(r.partial_sums[4..].iter().all(|&s| s == 4.0));
        assert_eq!(r.verdict, TransienceVerdict::FiniteLooking);

        let spaced = make_equally_spaced(2, prob(3, 4)).unwrap();
        let r = transience_stat(&spaced, 200).unwrap();
        assert_eq!(r.verdict, TransienceVerdict::FiniteLooking);
        // One period multiplies the running product by 1/3.
        let first = r.partial_sums[1];
        let second = r.partial_sums[3] - r.partial_sums[1];
        assert!((second / first - 1.0 / 3.0).abs() < 1e-12);
        assert!(transience_stat(&spaced, 0).is_err());
    }
}
