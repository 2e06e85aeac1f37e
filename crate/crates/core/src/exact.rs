//! Expected hitting times on the reflected segment, exactly.
//!
//! `v(x) = E^x[T_N]` solves
//!
//! ```text
//! v(0) = v(1) + 1
//! v(x) = ω(x) v(x+1) + (1 - ω(x)) v(x-1) + 1      0 < x < N
//! v(N) = 0
//! ```
//!
//! which is tridiagonal and is eliminated in one forward sweep. The same
//! matrix with right-hand side `1 + 2 Σ_y P(x,y) v(y)` gives the second
//! moments `w(x) = E^x[T_N^2]`.
//!
//! On every gap `[l_{j-1}, l_j]` between drifts the solution is a quadratic
//! `-x^2 + C_j x + D_j`; [`closed_form_coeffs`] and
//! [`closed_form_expectation`] evaluate those coefficients directly from the
//! drift positions.

use std::ops::{Div, Mul, Sub};

use num::{One, Zero};

use crate::environment::{make_finite_env, FiniteEnvironment, Probability};
use crate::error::Result;
use crate::rational::{int, ratio, Rational};

/// Thomas elimination for a tridiagonal system, no pivoting.
///
/// `lower[i]` multiplies `x[i-1]` and `upper[i]` multiplies `x[i+1]` in row
/// `i`; `lower[0]` and `upper[n-1]` are ignored. Callers guarantee nonzero
/// pivots (diagonally dominant systems).
pub fn solve_tridiagonal<T>(lower: &[T], diag: &[T], upper: &[T], rhs: &[T]) -> Vec<T>
where
    T: Clone + Zero + Sub<Output = T> + Mul<Output = T> + Div<Output = T>,
{
    let n = diag.len();
    assert!(lower.len() == n && upper.len() == n && rhs.len() == n);
    if n == 0 {
        return Vec::new();
    }
    let mut c = Vec::with_capacity(n);
    let mut d = Vec::with_capacity(n);
    c.push(upper[0].clone() / diag[0].clone());
    d.push(rhs[0].clone() / diag[0].clone());
    for i in 1..n {
        let pivot = diag[i].clone() - lower[i].clone() * c[i - 1].clone();
        c.push(upper[i].clone() / pivot.clone());
        d.push((rhs[i].clone() - lower[i].clone() * d[i - 1].clone()) / pivot);
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        let next = x[i + 1].clone();
        x[i] = x[i].clone() - c[i].clone() * next;
    }
    x
}

/// Rows of the hitting-time operator `I - P` restricted to `{0, .., N}`.
fn hitting_matrix(env: &FiniteEnvironment) -> (Vec<Rational>, Vec<Rational>, Vec<Rational>) {
    let n = env.len() as usize;
    let mut lower = vec![Rational::zero(); n + 1];
    let diag = vec![Rational::one(); n + 1];
    let mut upper = vec![Rational::zero(); n + 1];
    for x in 0..n {
        let right = env.prob(x as u64);
        lower[x] = -(Rational::one() - &right);
        upper[x] = -right;
    }
    lower[0] = Rational::zero();
    (lower, diag, upper)
}

/// Expected hitting times and, optionally, second moments on a segment.
#[derive(Clone, Debug, PartialEq)]
pub struct HittingSolution {
    pub env: FiniteEnvironment,
    /// `v[x] = E^x[T_N]` for `x = 0..=N`.
    pub v: Vec<Rational>,
    /// `w[x] = E^x[T_N^2]`, when requested.
    pub w: Option<Vec<Rational>>,
}

impl HittingSolution {
    pub fn from_origin(&self) -> &Rational {
        &self.v[0]
    }

    pub fn with_second_moment(mut self) -> Self {
        self.w = Some(second_moment_from(&self.env, &self.v));
        self
    }
}

pub fn solve_expected_hitting(env: &FiniteEnvironment) -> HittingSolution {
    let n = env.len() as usize;
    let (lower, diag, upper) = hitting_matrix(env);
    let mut rhs = vec![Rational::one(); n + 1];
    rhs[n] = Rational::zero();
    let v = solve_tridiagonal(&lower, &diag, &upper, &rhs);
    HittingSolution {
        env: env.clone(),
        v,
        w: None,
    }
}

fn second_moment_from(env: &FiniteEnvironment, v: &[Rational]) -> Vec<Rational> {
    let n = env.len() as usize;
    let (lower, diag, upper) = hitting_matrix(env);
    let two = int(2);
    let mut rhs = Vec::with_capacity(n + 1);
    for x in 0..n {
        let right = env.prob(x as u64);
        let left = Rational::one() - &right;
        let mut expect = &right * &v[x + 1];
        if x > 0 {
            expect += &left * &v[x - 1];
        }
        rhs.push(Rational::one() + &two * expect);
    }
    rhs.push(Rational::zero());
    solve_tridiagonal(&lower, &diag, &upper, &rhs)
}

/// `w(x) = E^x[T_N^2]` from `w(x) = 1 + Σ_y P(x,y)(2 v(y) + w(y))`, `w(N) = 0`.
pub fn solve_second_moment(env: &FiniteEnvironment) -> Vec<Rational> {
    let v = solve_expected_hitting(env).v;
    second_moment_from(env, &v)
}

/// Floating-point counterpart of [`solve_expected_hitting`] for long
/// segments. Agrees with the exact path to about `1e-9` relative.
pub fn solve_expected_hitting_f64(env: &FiniteEnvironment) -> Vec<f64> {
    let n = env.len() as usize;
    let p = env.p().to_f64();
    let mut lower = vec![0.0; n + 1];
    let diag = vec![1.0; n + 1];
    let mut upper = vec![0.0; n + 1];
    for x in 0..n {
        let right = if x == 0 {
            1.0
        } else if env.is_drift(x as u64) {
            p
        } else {
            0.5
        };
        lower[x] = -(1.0 - right);
        upper[x] = -right;
    }
    lower[0] = 0.0;
    let mut rhs = vec![1.0; n + 1];
    rhs[n] = 0.0;
    solve_tridiagonal(&lower, &diag, &upper, &rhs)
}

/// First and second moments of the reflected simple walk's hitting time of
/// `N`, checked against `E[S_N] = N^2` and `E[S_N^2] <= (5/3) N^4`.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentReport {
    pub n: u64,
    pub mean: Rational,
    pub second_moment: Rational,
    pub second_moment_bound: Rational,
}

impl MomentReport {
    pub fn mean_is_exact(&self) -> bool {
        let n = int(self.n as i64);
        self.mean == &n * &n
    }

    pub fn within_bound(&self) -> bool {
        self.second_moment <= self.second_moment_bound
    }
}

pub fn reflected_srw_moment_check(n: u64) -> Result<MomentReport> {
    // The drift strength is irrelevant without drifts.
    let env = make_finite_env(n, Probability::one(), &[])?;
    let sol = solve_expected_hitting(&env).with_second_moment();
    let nn = int(n as i64);
    let n4 = &nn * &nn * &nn * &nn;
    Ok(MomentReport {
        n,
        mean: sol.v[0].clone(),
        second_moment: sol.w.as_ref().expect("requested")[0].clone(),
        second_moment_bound: ratio(5, 3) * n4,
    })
}

/// Coefficients of `v(x) = -x^2 + C_j x + D_j` on `[l_{j-1}, l_j]`,
/// `j = 1..=k+1`, with `l_0 = 0` and `l_{k+1} = N`. Stored 0-based.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseQuadratic {
    pub n: u64,
    /// Breakpoints `l_0 = 0, l_1, .., l_k, l_{k+1} = N`.
    pub breaks: Vec<u64>,
    pub c: Vec<Rational>,
    pub d: Vec<Rational>,
}

impl PiecewiseQuadratic {
    /// Evaluates at `0 <= x <= N` on the leftmost piece containing `x`.
    pub fn eval(&self, x: u64) -> Rational {
        let j = self
            .breaks
            .windows(2)
            .position(|w| w[0] <= x && x <= w[1])
            .expect("x within [0, N]");
        let x = int(x as i64);
        -(&x * &x) + &self.c[j] * &x + &self.d[j]
    }
}

/// `2(2p - 1)/p` and `r = (1 - p)/p`, the constants shared by every display.
fn drift_constants(p: &Probability) -> (Rational, Rational) {
    let pv = p.value();
    let scale = int(2) * (pv * int(2) - Rational::one()) / pv;
    (scale, p.odds())
}

/// `C_1 = 0`, `C_j = (2(2p-1)/p) Σ_{i<j} r^{j-1-i} l_i`; `D` by continuity
/// from `D_{k+1} = N^2 - N C_{k+1}`.
///
/// The `C_j` sum is written with `r^{j-1-i}/p` in place of
/// `r^{j-i}/(1-p)`, which is the same for `p < 1` and stays finite at
/// `p = 1` (only `i = j - 1` survives, `C_j = 2 l_{j-1}`).
pub fn closed_form_coeffs(n: u64, p: &Probability, drifts: &[u64]) -> Result<PiecewiseQuadratic> {
    make_finite_env(n, p.clone(), drifts)?;
    let (scale, r) = drift_constants(p);
    let k = drifts.len();

    let mut c = Vec::with_capacity(k + 1);
    let mut acc = Rational::zero();
    c.push(Rational::zero());
    for &l in drifts {
        acc = &acc * &r + int(l as i64);
        c.push(&scale * &acc);
    }

    let nn = int(n as i64);
    let mut d = vec![Rational::zero(); k + 1];
    d[k] = &nn * &nn - &nn * &c[k];
    for j in (0..k).rev() {
        let l = int(drifts[j] as i64);
        d[j] = &d[j + 1] + (&c[j + 1] - &c[j]) * l;
    }

    let mut breaks = Vec::with_capacity(k + 2);
    breaks.push(0);
    breaks.extend_from_slice(drifts);
    breaks.push(n);
    Ok(PiecewiseQuadratic { n, breaks, c, d })
}

/// `f(l) = E^0[T_N] = D_1`, from the explicit quadratic polynomial in the
/// drift positions:
///
/// ```text
/// N^2 - (2(2p-1)/p) N Σ_i r^{k-i} l_i + (2(2p-1)/p) Σ_i l_i^2
///     - (2(2p-1)^2/p^2) Σ_i Σ_{m<i} r^{i-m-1} l_i l_m
/// ```
pub fn closed_form_expectation(n: u64, p: &Probability, drifts: &[u64]) -> Result<Rational> {
    make_finite_env(n, p.clone(), drifts)?;
    let (scale, r) = drift_constants(p);
    let cross_scale = &scale * &scale / int(2);
    let nn = int(n as i64);

    let mut tail = Rational::zero(); // Σ_i r^{k-i} l_i
    let mut squares = Rational::zero();
    let mut cross = Rational::zero();
    let mut inner = Rational::zero(); // Σ_{m<i} r^{i-m-1} l_m
    for &l in drifts {
        let l = int(l as i64);
        tail = &tail * &r + &l;
        squares += &l * &l;
        cross += &l * &inner;
        inner = &inner * &r + &l;
    }
    Ok(&nn * &nn - &scale * &nn * tail + &scale * squares - cross_scale * cross)
}
