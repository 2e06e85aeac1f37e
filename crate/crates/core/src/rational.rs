//! Exact rational helpers shared by every module.
//!
//! All exact quantities are [`BigRational`]s. Textual form is always
//! `num/den` (integers render as `n/1`) so that output is unambiguous and
//! parses back losslessly.

use num::bigint::Sign;
use num::{BigInt, BigRational, One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Parses `a/b` or a bare integer `a`. Decimal points are rejected.
pub fn parse(text: &str) -> Result<Rational> {
    let text = text.trim();
    let bad = || Error::Parse(format!("expected a rational `a/b`, got `{text}`"));
    if text.contains(['.', 'e', 'E']) {
        return Err(bad());
    }
    match text.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(Error::Parse(format!("zero denominator in `{text}`")));
            }
            Ok(Rational::new(n, d))
        }
        None => {
            let n: BigInt = text.parse().map_err(|_| bad())?;
            Ok(Rational::from_integer(n))
        }
    }
}

/// Renders in lowest terms as `num/den`, keeping `/1` for integers.
pub fn format(value: &Rational) -> String {
    format!("{}/{}", value.numer(), value.denom())
}

pub fn to_f64(value: &Rational) -> f64 {
    value.to_f64().unwrap_or_else(|| {
        // Fallback for huge numerators/denominators: scale both down.
        let shift = value
            .numer()
            .bits()
            .max(value.denom().bits())
            .saturating_sub(1000);
        let n = (value.numer() >> shift as usize)
            .to_f64()
            .unwrap_or(f64::NAN);
        let d = (value.denom() >> shift as usize)
            .to_f64()
            .unwrap_or(f64::NAN);
        n / d
    })
}

/// `base^exp` with the convention `0^0 = 1`.
pub fn pow(base: &Rational, exp: usize) -> Rational {
    let mut acc = Rational::one();
    let mut b = base.clone();
    let mut e = exp;
    while e > 0 {
        if e & 1 == 1 {
            acc *= &b;
        }
        e >>= 1;
        if e > 0 {
            b = &b * &b;
        }
    }
    acc
}

pub fn ceil_i64(value: &Rational) -> Option<i64> {
    value.ceil().to_integer().to_i64()
}

pub fn floor_i64(value: &Rational) -> Option<i64> {
    value.floor().to_integer().to_i64()
}

pub fn as_i64(value: &Rational) -> Option<i64> {
    if value.is_integer() {
        value.to_integer().to_i64()
    } else {
        None
    }
}

/// Small-integer view `(num, den)` for hot loops; `None` if it does not fit.
pub fn as_i128_pair(value: &Rational) -> Option<(i128, i128)> {
    Some((value.numer().to_i128()?, value.denom().to_i128()?))
}

/// Threshold `t` such that for a 53-bit draw `k`, `k < t` exactly when
/// `k / 2^53 < value`. Requires `0 <= value <= 1`.
pub fn unit_threshold(value: &Rational) -> u64 {
    debug_assert!(!value.is_negative() && *value <= Rational::one());
    let scaled = value * Rational::from_integer(BigInt::from(1u64 << 53));
    let t = scaled.ceil().to_integer();
    match t.sign() {
        Sign::Minus | Sign::NoSign => 0,
        Sign::Plus => t.to_u64().unwrap_or(1u64 << 53),
    }
}

/// Formats a float with 15 significant digits, shortest representation.
pub fn round15(x: f64) -> f64 {
    if !x.is_finite() {
        return x;
    }
    format!("{x:.14e}").parse().unwrap_or(x)
}
