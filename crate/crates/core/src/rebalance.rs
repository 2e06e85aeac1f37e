//! Interval rebalancing at `p = 1`.
//!
//! With `p = 1` the walk never steps back past a drift, so `E^0[T_N]` is the
//! sum of squared interval lengths. Replacing a pair of lengths `(i, k)`
//! with `k - i >= 2` by `(i + 1, k - 1)` lowers it by exactly `2(k - i - 1)`,
//! and repeating until all lengths differ by at most one ends at lengths
//! `m` and `m + 1`.

use crate::environment::{FiniteEnvironment, Probability};
use crate::error::{invalid, Error, Result};
use crate::exact::solve_expected_hitting;
use crate::rational::{self, int, Rational};

/// One move of the descent.
#[derive(Clone, Debug, PartialEq)]
pub struct RebalanceStep {
    /// Index of the interval that grows.
    pub short_index: usize,
    /// Index of the interval that shrinks.
    pub long_index: usize,
    /// `(i, k)`: the two lengths before the move.
    pub lengths: (u64, u64),
    pub drifts_before: Vec<u64>,
    pub drifts_after: Vec<u64>,
    pub expected_before: Rational,
    pub expected_after: Rational,
    /// `2(k - i - 1)`, confirmed against the exact solver.
    pub decrease: Rational,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RebalanceOutcome {
    pub env: FiniteEnvironment,
    pub trace: Vec<RebalanceStep>,
    /// `⌊N / (k + 1)⌋`; terminal lengths are `m` or `m + 1`.
    pub m: u64,
}

/// Leftmost longest interval, paired with the leftmost interval at least
/// two shorter.
fn next_move(lengths: &[u64]) -> Option<(usize, usize)> {
    let max = *lengths.iter().max()?;
    let long = lengths.iter().position(|&x| x == max)?;
    let short = lengths.iter().position(|&x| x + 2 <= max)?;
    Some((short, long))
}

pub fn rebalance_descent(env: &FiniteEnvironment) -> Result<RebalanceOutcome> {
    if *env.p() != Probability::one() {
        return Err(invalid("interval rebalancing is defined for p = 1 only"));
    }
    let mut current = env.clone();
    let mut lengths = current.intervals();
    let mut expected = solve_expected_hitting(&current).v[0].clone();
    let mut trace = Vec::new();

    while let Some((short, long)) = next_move(&lengths) {
        let (i, k) = (lengths[short], lengths[long]);
        lengths[short] += 1;
        lengths[long] -= 1;
        let next = FiniteEnvironment::from_intervals(Probability::one(), &lengths)?;
        let after = solve_expected_hitting(&next).v[0].clone();
        let decrease = int(2 * (k - i - 1) as i64);
        if &expected - &after != decrease {
            return Err(Error::Consistency(format!(
                "move ({i}, {k}) changed E[T_N] from {} to {}, expected a drop of {}",
                rational::format(&expected),
                rational::format(&after),
                rational::format(&decrease)
            )));
        }
        trace.push(RebalanceStep {
            short_index: short,
            long_index: long,
            lengths: (i, k),
            drifts_before: current.drifts().to_vec(),
            drifts_after: next.drifts().to_vec(),
            expected_before: expected,
            expected_after: after.clone(),
            decrease,
        });
        current = next;
        expected = after;
    }

    let m = current.len() / (current.k() as u64 + 1);
    Ok(RebalanceOutcome {
        env: current,
        trace,
        m,
    })
}
