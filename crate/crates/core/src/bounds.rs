//! Closed-form speeds, speed bounds and gaps.

use num::{One, Signed, Zero};
use rayon::prelude::*;

use crate::environment::{Probability, StructuredDensity};
use crate::error::{invalid, Error, Result};
use crate::rational::{self, int, pow, ratio, Rational};

fn check_lambda(lambda: &Rational) -> Result<()> {
    if lambda.is_negative() || *lambda > Rational::one() {
        return Err(invalid(format!(
            "density λ = {} outside [0, 1]",
            rational::format(lambda)
        )));
    }
    Ok(())
}

/// `(2p - 1) λ`.
pub fn speed_upper_bound(p: &Probability, lambda: &Rational) -> Result<Rational> {
    p.ensure_drift()?;
    check_lambda(lambda)?;
    Ok((p.value() * int(2) - int(1)) * lambda)
}

/// Speed of the Υ environment at `p = 1`: `1 / (2m + 1 - m(m+1)λ)`.
pub fn upsilon_speed(m: u64, lambda: &Rational) -> Result<Rational> {
    if m == 0 {
        return Err(invalid("Υ spacing m must be at least 1"));
    }
    let mi = m as i64;
    if *lambda < ratio(1, mi + 1) || *lambda > ratio(1, mi) {
        return Err(invalid(format!(
            "λ = {} outside [1/{}, 1/{}]",
            rational::format(lambda),
            m + 1,
            m
        )));
    }
    Ok(Rational::one() / (int(2 * mi + 1) - int(mi * (mi + 1)) * lambda))
}

/// `λ - upsilon_speed(m, λ)` at `λ = n/(mn + l)`, with its rearrangements.
#[derive(Clone, Debug, PartialEq)]
pub struct GapReport {
    pub lambda: Rational,
    pub speed: Rational,
    /// By direct subtraction.
    pub gap: Rational,
    /// `l(n-l) / ((mn+l)(m²n + 2ml + l))`.
    pub formula: Rational,
    /// `λ³ · l(n-l)/n² · 1/(1 + l(n-l)/(mn+l)²)`.
    pub rearranged: Rational,
    /// The same with `1 - ...` in the last denominator; not equal to the gap.
    pub rearranged_minus: Rational,
    /// `λ³ (1/n - 1/n²) / 2`.
    pub cubic_lower: Rational,
}

pub fn tightness_gap(n: u64, m: u64, l: u64) -> Result<GapReport> {
    let sd = StructuredDensity::new(n, m, l)?;
    let lambda = sd.lambda();
    let speed = upsilon_speed(m, &lambda)?;
    let gap = &lambda - &speed;

    let (n, m, l) = (int(n as i64), int(m as i64), int(l as i64));
    let mn_l = &m * &n + &l;
    let spread = &l * (&n - &l);
    let formula = &spread / (&mn_l * (&m * &m * &n + int(2) * &m * &l + &l));
    let cube = pow(&lambda, 3);
    let lead = &cube * &spread / (&n * &n);
    let ratio_term = &spread / (&mn_l * &mn_l);
    let rearranged = &lead / (Rational::one() + &ratio_term);
    let rearranged_minus = &lead / (Rational::one() - &ratio_term);
    let cubic_lower = &cube * (Rational::one() / &n - Rational::one() / (&n * &n)) / int(2);

    if gap != formula || gap != rearranged {
        return Err(Error::Consistency(format!(
            "gap {} vs formula {} vs rearrangement {}",
            rational::format(&gap),
            rational::format(&formula),
            rational::format(&rearranged)
        )));
    }
    if !gap.is_positive() || gap < cubic_lower {
        return Err(Error::Consistency(format!(
            "gap {} not above λ³(1/n - 1/n²)/2 = {}",
            rational::format(&gap),
            rational::format(&cubic_lower)
        )));
    }
    Ok(GapReport {
        lambda,
        speed,
        gap,
        formula,
        rearranged,
        rearranged_minus,
        cubic_lower,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JensenBound {
    /// `S(p, λ)`; infinite at `λ = 0`.
    pub s: f64,
    /// `1 / S`.
    pub bound: f64,
}

/// `S(p,λ) = p^{-λ} 2^{1-λ} r^λ/(1 - r^λ) + λ/p + 2(1 - λ)` with
/// `r = (1-p)/p`, and the speed bound `1/S`.
pub fn jensen_rwre_bound(p: &Probability, lambda: &Rational) -> Result<JensenBound> {
    p.ensure_drift()?;
    check_lambda(lambda)?;
    let pf = p.to_f64();
    let lf = rational::to_f64(lambda);
    let tail = lf / pf + 2.0 * (1.0 - lf);
    let s = if p.value().is_one() {
        tail
    } else if lambda.is_zero() {
        f64::INFINITY
    } else {
        let log_r = rational::to_f64(&p.odds()).ln();
        let r_pow = (lf * log_r).exp();
        // 1 - r^λ without cancellation for small λ.
        let denom = -(lf * log_r).exp_m1();
        pf.powf(-lf) * 2f64.powf(1.0 - lf) * r_pow / denom + tail
    };
    Ok(JensenBound { s, bound: 1.0 / s })
}

/// Speed of the i.i.d. environment: `(2p-1)λ / (λ + 2p(1-λ))`.
pub fn iid_rwre_speed(p: &Probability, lambda: &Rational) -> Result<Rational> {
    p.ensure_drift()?;
    check_lambda(lambda)?;
    let pv = p.value();
    Ok((pv * int(2) - int(1)) * lambda / (lambda + int(2) * pv * (Rational::one() - lambda)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Winner {
    Main,
    Jensen,
    Tie,
}

impl Winner {
    pub fn as_str(&self) -> &'static str {
        match self {
            Winner::Main => "main",
            Winner::Jensen => "jensen",
            Winner::Tie => "tie",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundReport {
    pub p: Probability,
    pub lambda: Rational,
    pub main_bound: Rational,
    pub jensen: JensenBound,
    pub iid_speed: Rational,
    /// Which upper bound is smaller.
    pub winner: Winner,
}

pub fn bound_report(p: &Probability, lambda: &Rational) -> Result<BoundReport> {
    let main_bound = speed_upper_bound(p, lambda)?;
    let jensen = jensen_rwre_bound(p, lambda)?;
    let main = rational::to_f64(&main_bound);
    let winner = if main < jensen.bound {
        Winner::Main
    } else if main > jensen.bound {
        Winner::Jensen
    } else {
        Winner::Tie
    };
    Ok(BoundReport {
        p: p.clone(),
        lambda: lambda.clone(),
        iid_speed: iid_rwre_speed(p, lambda)?,
        main_bound,
        jensen,
        winner,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridCell {
    pub p: Rational,
    pub lambda: Rational,
    pub main: f64,
    pub jensen: f64,
    /// `main - jensen`; negative where the main bound is tighter.
    pub diff: f64,
}

fn grid_axis(lo: &Rational, hi: &Rational, resolution: usize) -> Vec<Rational> {
    if resolution == 1 {
        return vec![lo.clone()];
    }
    let steps = int(resolution as i64 - 1);
    (0..resolution)
        .map(|i| lo + (hi - lo) * int(i as i64) / &steps)
        .collect()
}

/// `(2p-1)λ - 1/S(p,λ)` on a `resolution × resolution` rational grid
/// spanning both ranges inclusively, rows ordered by `p`.
pub fn bound_diff_grid(
    p_range: (&Rational, &Rational),
    lambda_range: (&Rational, &Rational),
    resolution: usize,
) -> Result<Vec<GridCell>> {
    if resolution == 0 {
        return Err(invalid("grid resolution must be at least 1"));
    }
    let half = ratio(1, 2);
    if p_range.0 <= &half || p_range.1 > &Rational::one() || p_range.0 > p_range.1 {
        return Err(invalid("p range must lie in (1/2, 1] with lo <= hi"));
    }
    if lambda_range.0.is_negative()
        || lambda_range.1 > &Rational::one()
        || lambda_range.0 > lambda_range.1
    {
        return Err(invalid("λ range must lie in [0, 1] with lo <= hi"));
    }
    let ps = grid_axis(p_range.0, p_range.1, resolution);
    let lambdas = grid_axis(lambda_range.0, lambda_range.1, resolution);
    let rows: Vec<Vec<GridCell>> = ps
        .par_iter()
        .map(|pv| {
            let p = Probability::new(pv.clone())?;
            lambdas
                .iter()
                .map(|lv| {
                    let main = rational::to_f64(&speed_upper_bound(&p, lv)?);
                    let jensen = jensen_rwre_bound(&p, lv)?.bound;
                    Ok(GridCell {
                        p: pv.clone(),
                        lambda: lv.clone(),
                        main,
                        jensen,
                        diff: main - jensen,
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(rows.into_iter().flatten().collect())
}

pub const GRID_HEADER: &str = "p,lambda,main,jensen,diff";

/// CSV with header `p,lambda,main,jensen,diff`; floats to 15 significant digits.
pub fn grid_csv(cells: &[GridCell]) -> String {
    let mut out = String::from(GRID_HEADER);
    out.push('\n');
    for c in cells {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            rational::format(&c.p),
            rational::format(&c.lambda),
            rational::round15(c.main),
            rational::round15(c.jensen),
            rational::round15(c.diff)
        ));
    }
    out
}
