//! The expected hitting time `f(l) = E^0[T_N]` as a quadratic form in the
//! drift positions.
//!
//! With `r = (1-p)/p`, the Hessian of `f` is the constant `k × k` matrix
//!
//! ```text
//! H(i,i) = 4(2p-1)/p
//! H(i,j) = -(2(2p-1)^2/p^2) r^{|i-j|-1}      i ≠ j
//! ```
//!
//! and `f(l) = N^2/((2p-1)k+1) + ½ ⟨H (l-b), (l-b)⟩` where `b` is the
//! unique minimizer. `M = H / (-2(2p-1)^2/p^2)` has the unit off-diagonal
//! band and a simple determinant recursion.

use num::{One, Signed, Zero};

use crate::environment::{make_finite_env, Probability};
use crate::error::{invalid, Error, Result};
use crate::exact::closed_form_expectation;
use crate::rational::{self, int, pow, Rational};

pub type RatMatrix = Vec<Vec<Rational>>;

fn check_k(k: usize, p: &Probability) -> Result<()> {
    if k == 0 {
        return Err(invalid("drift count k must be at least 1"));
    }
    p.ensure_drift()
}

fn two_p_minus_one(p: &Probability) -> Rational {
    p.value() * int(2) - Rational::one()
}

/// `-2(2p-1)^2/p^2`, the factor with `H = factor · M`.
pub fn hessian_scale(p: &Probability) -> Rational {
    let s = two_p_minus_one(p);
    -(int(2) * &s * &s) / (p.value() * p.value())
}

pub fn build_hessian(k: usize, p: &Probability) -> Result<RatMatrix> {
    check_k(k, p)?;
    let scale = hessian_scale(p);
    let diag = int(4) * two_p_minus_one(p) / p.value();
    let r = p.odds();
    Ok(toeplitz(k, |d| {
        if d == 0 {
            diag.clone()
        } else {
            &scale * pow(&r, d - 1)
        }
    }))
}

/// `M_k`, with diagonal `-2p/(2p-1)` and off-diagonals `r^{|i-j|-1}`.
pub fn build_scaled_m(k: usize, p: &Probability) -> Result<RatMatrix> {
    check_k(k, p)?;
    let diag = -(int(2) * p.value()) / two_p_minus_one(p);
    let r = p.odds();
    Ok(toeplitz(k, |d| {
        if d == 0 {
            diag.clone()
        } else {
            pow(&r, d - 1)
        }
    }))
}

fn toeplitz(k: usize, entry: impl Fn(usize) -> Rational) -> RatMatrix {
    let band: Vec<Rational> = (0..k).map(entry).collect();
    (0..k)
        .map(|i| (0..k).map(|j| band[i.abs_diff(j)].clone()).collect())
        .collect()
}

/// Gaussian elimination with row swaps on zero pivots.
pub fn det_by_elimination(matrix: &RatMatrix) -> Rational {
    let n = matrix.len();
    let mut a = matrix.clone();
    let mut det = Rational::one();
    for col in 0..n {
        let Some(pivot_row) = (col..n).find(|&r| !a[r][col].is_zero()) else {
            return Rational::zero();
        };
        if pivot_row != col {
            a.swap(pivot_row, col);
            det = -det;
        }
        det *= &a[col][col];
        eliminate_below(&mut a, col);
    }
    det
}

/// Clears column `col` below the diagonal using row `col` as pivot row.
fn eliminate_below(a: &mut RatMatrix, col: usize) {
    let (top, bottom) = a.split_at_mut(col + 1);
    let pivot_row = &top[col];
    for row in bottom.iter_mut() {
        if row[col].is_zero() {
            continue;
        }
        let factor = &row[col] / &pivot_row[col];
        for (dst, src) in row[col..].iter_mut().zip(&pivot_row[col..]) {
            *dst -= &factor * src;
        }
    }
}

/// Determinants of the leading `j × j` blocks, `j = 1..=n`.
pub fn leading_minors(matrix: &RatMatrix) -> Vec<Rational> {
    let n = matrix.len();
    let mut a = matrix.clone();
    let mut out = Vec::with_capacity(n);
    let mut running = Rational::one();
    for col in 0..n {
        let pivot = a[col][col].clone();
        if pivot.is_zero() {
            // No LDLᵀ past a zero pivot; finish the remaining blocks directly.
            for j in col + 1..=n {
                let block: RatMatrix = matrix[..j].iter().map(|row| row[..j].to_vec()).collect();
                out.push(det_by_elimination(&block));
            }
            return out;
        }
        running *= &pivot;
        out.push(running.clone());
        eliminate_below(&mut a, col);
    }
    out
}

/// Positive definiteness by the leading-principal-minor criterion.
pub fn is_positive_definite(matrix: &RatMatrix) -> bool {
    leading_minors(matrix).iter().all(Signed::is_positive)
}

/// `det(H_k) = (k(2p-1)+1) 2^k (2p-1)^k / p^{2k}`.
pub fn hessian_det_closed(k: usize, p: &Probability) -> Rational {
    let s = two_p_minus_one(p);
    (&s * int(k as i64) + int(1)) * pow(&(int(2) * &s), k) / pow(&(p.value() * p.value()), k)
}

/// `det(M_k) = (-1)^k (k(2p-1)+1) / (2p-1)^k`.
pub fn scaled_m_det_closed(k: usize, p: &Probability) -> Rational {
    let s = two_p_minus_one(p);
    let sign = if k.is_multiple_of(2) { int(1) } else { int(-1) };
    sign * (&s * int(k as i64) + int(1)) / pow(&s, k)
}

/// `det(M_k)` from the three-term recursion
/// `det M_k = α det M_{k-1} - β det M_{k-2}` with
/// `α = -2p/(2p-1) - 2(1-p)/p - 2(1-p)^2/(p(2p-1))`,
/// `β = (1 + 2(1-p)/(2p-1))^2`, seeded by `det M_1` and `det M_2`.
pub fn scaled_m_det_recursion(k: usize, p: &Probability) -> Rational {
    let pv = p.value();
    let s = two_p_minus_one(p);
    let q = Rational::one() - pv;
    let two = int(2);
    let alpha = -(&two * pv) / &s - &two * &q / pv - &two * &q * &q / (pv * &s);
    let beta_root = Rational::one() + &two * &q / &s;
    let beta = &beta_root * &beta_root;

    let diag = -(&two * pv) / &s;
    let m1 = diag.clone();
    if k == 1 {
        return m1;
    }
    let m2 = &diag * &diag - Rational::one();
    let (mut prev, mut cur) = (m1, m2);
    for _ in 3..=k {
        let next = &alpha * &cur - &beta * &prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Closed-form determinants cross-checked against elimination.
#[derive(Clone, Debug, PartialEq)]
pub struct DeterminantReport {
    pub k: usize,
    pub hessian_closed: Rational,
    pub hessian_eliminated: Rational,
    pub scaled_closed: Rational,
    pub scaled_eliminated: Rational,
    pub scaled_recursion: Rational,
}

/// Returns [`Error::Consistency`] if any two routes disagree.
pub fn hessian_determinant(k: usize, p: &Probability) -> Result<DeterminantReport> {
    let h = build_hessian(k, p)?;
    let m = build_scaled_m(k, p)?;
    let report = DeterminantReport {
        k,
        hessian_closed: hessian_det_closed(k, p),
        hessian_eliminated: det_by_elimination(&h),
        scaled_closed: scaled_m_det_closed(k, p),
        scaled_eliminated: det_by_elimination(&m),
        scaled_recursion: scaled_m_det_recursion(k, p),
    };
    if report.hessian_closed != report.hessian_eliminated {
        return Err(Error::Consistency(format!(
            "det H_{k}: closed form {} vs elimination {}",
            rational::format(&report.hessian_closed),
            rational::format(&report.hessian_eliminated)
        )));
    }
    if report.scaled_closed != report.scaled_eliminated
        || report.scaled_closed != report.scaled_recursion
    {
        return Err(Error::Consistency(format!(
            "det M_{k}: closed form {}, elimination {}, recursion {}",
            rational::format(&report.scaled_closed),
            rational::format(&report.scaled_eliminated),
            rational::format(&report.scaled_recursion)
        )));
    }
    Ok(report)
}

/// `N^2 / ((2p-1)k + 1)`, the least possible `E^0[T_N]` with `k` drifts.
pub fn minimum_value(n: u64, p: &Probability, k: usize) -> Rational {
    let nn = int(n as i64);
    &nn * &nn / (two_p_minus_one(p) * int(k as i64) + int(1))
}

/// `b_i = ((2p-1) i + (1-p)) N / ((2p-1)k + 1)`, `i = 1..=k`.
pub fn optimal_b(n: u64, p: &Probability, k: usize) -> Result<Vec<Rational>> {
    check_k(k, p)?;
    let s = two_p_minus_one(p);
    let q = Rational::one() - p.value();
    let den = &s * int(k as i64) + int(1);
    let nn = int(n as i64);
    Ok((1..=k as i64)
        .map(|i| (&s * int(i) + &q) * &nn / &den)
        .collect())
}

/// Whether `b` is an integer placement: both `(2p-1)N/((2p-1)k+1)` and
/// `pN/((2p-1)k+1)` are integers.
pub fn integer_feasible(n: u64, p: &Probability, k: usize) -> Result<bool> {
    check_k(k, p)?;
    let s = two_p_minus_one(p);
    let den = &s * int(k as i64) + int(1);
    let nn = int(n as i64);
    let step = &s * &nn / &den;
    let first = p.value() * &nn / &den;
    Ok(step.is_integer() && first.is_integer())
}

/// `b` as integer drift positions when [`integer_feasible`].
pub fn integer_b(n: u64, p: &Probability, k: usize) -> Result<Option<Vec<u64>>> {
    if !integer_feasible(n, p, k)? {
        return Ok(None);
    }
    Ok(Some(
        optimal_b(n, p, k)?
            .iter()
            .map(|b| rational::as_i64(b).expect("feasible") as u64)
            .collect(),
    ))
}

/// `⟨H x, x⟩`.
pub fn quadratic_form(h: &RatMatrix, x: &[Rational]) -> Rational {
    let mut acc = Rational::zero();
    for (i, row) in h.iter().enumerate() {
        let mut hx = Rational::zero();
        for (hij, xj) in row.iter().zip(x) {
            hx += hij * xj;
        }
        acc += hx * &x[i];
    }
    acc
}

/// The quadratic-form decomposition of `f(l)` for fixed `(N, p, k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DriftQuadratic {
    pub n: u64,
    pub p: Probability,
    pub k: usize,
    pub hessian: RatMatrix,
    pub b: Vec<Rational>,
    pub minimum_value: Rational,
}

impl DriftQuadratic {
    pub fn new(n: u64, p: &Probability, k: usize) -> Result<Self> {
        Ok(Self {
            n,
            p: p.clone(),
            k,
            hessian: build_hessian(k, p)?,
            b: optimal_b(n, p, k)?,
            minimum_value: minimum_value(n, p, k),
        })
    }

    fn deviation_form(&self, l: &[u64]) -> Rational {
        let dev: Vec<Rational> = l
            .iter()
            .zip(&self.b)
            .map(|(&li, bi)| int(li as i64) - bi)
            .collect();
        quadratic_form(&self.hessian, &dev)
    }

    /// `N^2/((2p-1)k+1) + ½ ⟨H(l-b), l-b⟩`.
    pub fn eval(&self, l: &[u64]) -> Rational {
        &self.minimum_value + self.deviation_form(l) / int(2)
    }
}

/// Both sides of the quadratic identity at one placement.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticIdentity {
    /// `f(l)` from the explicit polynomial.
    pub direct: Rational,
    /// `min + ½⟨H(l-b), l-b⟩`.
    pub via_form: Rational,
    pub residual: Rational,
    /// `min + ⟨H(l-b), l-b⟩`, the identity without the ½.
    pub without_half: Rational,
}

pub fn evaluate_quadratic_identity(
    n: u64,
    p: &Probability,
    l: &[u64],
) -> Result<QuadraticIdentity> {
    make_finite_env(n, p.clone(), l)?;
    let direct = closed_form_expectation(n, p, l)?;
    let q = DriftQuadratic::new(n, p, l.len())?;
    let form = q.deviation_form(l);
    let via_form = &q.minimum_value + &form / int(2);
    Ok(QuadraticIdentity {
        residual: &direct - &via_form,
        without_half: &q.minimum_value + form,
        direct,
        via_form,
    })
}

/// `C(p) = 8(2p-1)/p`: the row-sum bound summed over the whole geometric
/// series.
pub fn norm_constant(p: &Probability) -> Rational {
    int(8) * two_p_minus_one(p) / p.value()
}

/// Largest absolute row sum of `H_k` (equal to the column sum by symmetry,
/// so also an upper bound on `‖H_k‖_2`).
pub fn max_row_sum(k: usize, p: &Probability) -> Result<Rational> {
    check_k(k, p)?;
    let diag = int(4) * two_p_minus_one(p) / p.value();
    let off = -hessian_scale(p);
    let r = p.odds();
    // Partial geometric sums g[m] = Σ_{j<m} r^j.
    let mut g = Vec::with_capacity(k);
    let mut acc = Rational::zero();
    let mut term = Rational::one();
    for _ in 0..k {
        g.push(acc.clone());
        acc += &term;
        term *= &r;
    }
    Ok((0..k)
        .map(|i| &diag + &off * (&g[k - 1 - i] + &g[i]))
        .max()
        .expect("k >= 1"))
}

/// Spectral-norm estimate for `H_k` next to its proven bound.
#[derive(Clone, Debug, PartialEq)]
pub struct NormReport {
    pub k: usize,
    /// Largest eigenvalue estimate; never above the true `‖H_k‖_2`.
    pub estimate: f64,
    /// `true` for `k <= 3` where the eigenvalue is computed in closed form.
    pub exact: bool,
    pub iterations: usize,
    /// Max absolute row sum, an upper bound on `‖H_k‖_2`.
    pub row_sum_bound: Rational,
    pub constant: Rational,
}

impl NormReport {
    pub fn within_constant(&self) -> bool {
        self.estimate <= rational::to_f64(&self.constant) && self.row_sum_bound <= self.constant
    }
}

const POWER_TOLERANCE: f64 = 1e-10;
const POWER_MAX_ITERATIONS: usize = 200_000;

/// `y = H x` in O(k), using the geometric band.
fn hessian_apply(diag: f64, off: f64, r: f64, x: &[f64], y: &mut [f64]) {
    let k = x.len();
    let mut left = 0.0;
    for i in 0..k {
        y[i] = diag * x[i] + off * left;
        left = r * left + x[i];
    }
    let mut right = 0.0;
    for i in (0..k).rev() {
        y[i] += off * right;
        right = r * right + x[i];
    }
}

pub fn hessian_norm_report(k: usize, p: &Probability) -> Result<NormReport> {
    check_k(k, p)?;
    let s = rational::to_f64(&two_p_minus_one(p));
    let pf = p.to_f64();
    let diag = 4.0 * s / pf;
    let off = -2.0 * s * s / (pf * pf);
    let r = (1.0 - pf) / pf;

    let (estimate, exact, iterations) = match k {
        1 => (diag, true, 0),
        2 => (diag + off.abs(), true, 0),
        3 => {
            // Antisymmetric mode gives a - c; the symmetric pair solves a 2x2.
            let (a, b, c) = (diag, off, off * r);
            let sym = ((2.0 * a + c) + (c * c + 8.0 * b * b).sqrt()) / 2.0;
            (sym.max(a - c), true, 0)
        }
        _ => {
            // Ramp start: the all-ones vector is orthogonal to every
            // antisymmetric eigenvector of a symmetric Toeplitz matrix.
            let mut x: Vec<f64> = (1..=k).map(|i| i as f64).collect();
            let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            x.iter_mut().for_each(|v| *v /= norm);
            let mut y = vec![0.0; k];
            let mut rayleigh = 0.0;
            let mut iterations = 0;
            for it in 1..=POWER_MAX_ITERATIONS {
                hessian_apply(diag, off, r, &x, &mut y);
                let next: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
                let ny = y.iter().map(|v| v * v).sum::<f64>().sqrt();
                for (xi, yi) in x.iter_mut().zip(&y) {
                    *xi = yi / ny;
                }
                iterations = it;
                let stalled = (next - rayleigh).abs() <= POWER_TOLERANCE * next.abs();
                rayleigh = next;
                if stalled {
                    break;
                }
            }
            (rayleigh, false, iterations)
        }
    };
    Ok(NormReport {
        k,
        estimate,
        exact,
        iterations,
        row_sum_bound: max_row_sum(k, p)?,
        constant: norm_constant(p),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::solve_expected_hitting;
    use crate::rational::ratio;
    use proptest::prelude::*;

    fn prob(n: i64, d: i64) -> Probability {
        Probability::from_ratio(n, d).unwrap()
    }

    const TEST_PS: [(i64, i64); 4] = [(3, 5), (3, 4), (9, 10), (1, 1)];

    #[test]
    fn hessian_examples() {
        assert_eq!(build_hessian(1, &prob(1, 1)).unwrap(), vec![vec![int(4)]]);
        assert_eq!(
            build_hessian(2, &prob(1, 1)).unwrap(),
            vec![vec![int(4), int(-2)], vec![int(-2), int(4)]]
        );
        let h = build_hessian(2, &prob(3, 4)).unwrap();
        assert_eq!(h[0][0], ratio(8, 3));
        assert_eq!(h[0][1], ratio(-8, 9));
        assert!(build_hessian(0, &prob(1, 1)).is_err());
    }

    #[test]
    fn hessian_is_scaled_m() {
        for &(a, b) in &TEST_PS {
            let p = prob(a, b);
            let h = build_hessian(5, &p).unwrap();
            let m = build_scaled_m(5, &p).unwrap();
            let s = hessian_scale(&p);
            for i in 0..5 {
                for j in 0..5 {
                    assert_eq!(h[i][j], &s * &m[i][j]);
                }
            }
        }
    }

    #[test]
    fn hessian_matches_second_differences_of_f() {
        // f is quadratic, so central second differences are exact.
        let p = prob(3, 4);
        let n = 60;
        let l = [10u64, 22, 31, 47];
        let h = build_hessian(l.len(), &p).unwrap();
        let f = |v: &[u64]| closed_form_expectation(n, &p, v).unwrap();
        for i in 0..l.len() {
            for j in 0..l.len() {
                let bump = |di: i64, dj: i64| {
                    let mut v: Vec<i64> = l.iter().map(|&x| x as i64).collect();
                    v[i] += di;
                    v[j] += dj;
                    f(&v.iter().map(|&x| x as u64).collect::<Vec<_>>())
                };
                let second = if i == j {
                    bump(1, 0) + bump(-1, 0) - int(2) * f(&l)
                } else {
                    (bump(1, 1) - bump(1, -1) - bump(-1, 1) + bump(-1, -1)) / int(4)
                };
                assert_eq!(second, h[i][j], "({i},{j})");
            }
        }
    }

    #[test]
    fn determinant_examples() {
        assert_eq!(
            hessian_determinant(1, &prob(1, 1)).unwrap().hessian_closed,
            int(4)
        );
        assert_eq!(
            hessian_determinant(2, &prob(1, 1))
                .unwrap()
                .hessian_eliminated,
            int(12)
        );
        let r = hessian_determinant(3, &prob(3, 4)).unwrap();
        assert_eq!(r.hessian_closed, ratio(10240, 729));
        assert_eq!(r.hessian_eliminated, ratio(10240, 729));
    }

    #[test]
    fn determinant_routes_agree_up_to_twelve() {
        for &(a, b) in &TEST_PS {
            for k in 1..=12 {
                hessian_determinant(k, &prob(a, b)).unwrap();
            }
        }
    }

    #[test]
    fn elimination_handles_zero_pivot() {
        let m = vec![vec![int(0), int(1)], vec![int(1), int(0)]];
        assert_eq!(det_by_elimination(&m), int(-1));
        assert_eq!(leading_minors(&m), vec![int(0), int(-1)]);
        assert!(!is_positive_definite(&m));
    }

    #[test]
    fn positive_definite_up_to_thirty() {
        for &(a, b) in &TEST_PS {
            let p = prob(a, b);
            let minors = leading_minors(&build_hessian(30, &p).unwrap());
            for (j, minor) in minors.iter().enumerate() {
                assert!(minor.is_positive());
                assert_eq!(*minor, hessian_det_closed(j + 1, &p));
            }
        }
    }

    #[test]
    fn b_and_feasibility_examples() {
        assert_eq!(optimal_b(2, &prob(1, 1), 1).unwrap(), vec![int(1)]);
        assert_eq!(optimal_b(8, &prob(3, 4), 2).unwrap(), vec![int(3), int(5)]);
        assert_eq!(optimal_b(4, &prob(1, 1), 1).unwrap(), vec![int(2)]);
        assert!(integer_feasible(2, &prob(1, 1), 1).unwrap());
        assert!(integer_feasible(8, &prob(3, 4), 2).unwrap());
        assert!(!integer_feasible(3, &prob(1, 1), 1).unwrap());
        assert_eq!(integer_b(8, &prob(3, 4), 2).unwrap(), Some(vec![3, 5]));
        assert_eq!(integer_b(3, &prob(1, 1), 1).unwrap(), None);
    }

    #[test]
    fn b_is_strictly_inside() {
        for &(a, c) in &TEST_PS {
            for k in 1..10 {
                let b = optimal_b(17, &prob(a, c), k).unwrap();
                assert!(b[0].is_positive() && b[k - 1] < int(17));
                assert!(b.windows(2).all(|w| w[0] < w[1]));
            }
        }
    }

    #[test]
    fn identity_examples() {
        let q = evaluate_quadratic_identity(4, &prob(1, 1), &[2]).unwrap();
        assert_eq!((q.direct.clone(), q.via_form.clone()), (int(8), int(8)));
        assert!(q.residual.is_zero());
        let q = evaluate_quadratic_identity(4, &prob(1, 1), &[1]).unwrap();
        assert_eq!((q.direct.clone(), q.via_form.clone()), (int(10), int(10)));
        assert_eq!(q.without_half, int(12));
        let q = evaluate_quadratic_identity(8, &prob(3, 4), &[3, 5]).unwrap();
        assert_eq!(q.via_form, int(32));
    }

    #[test]
    fn norm_examples() {
        let r = hessian_norm_report(1, &prob(1, 1)).unwrap();
        assert_eq!((r.estimate, rational::to_f64(&r.constant)), (4.0, 8.0));
        let r = hessian_norm_report(200, &prob(1, 1)).unwrap();
        assert!(r.estimate < 8.0 && r.within_constant());
        let r = hessian_norm_report(50, &prob(3, 4)).unwrap();
        assert_eq!(r.constant, ratio(16, 3));
        assert!(r.estimate <= 16.0 / 3.0 && r.within_constant());
    }

    #[test]
    fn norm_matches_tridiagonal_spectrum_at_p_one() {
        // At p = 1, H = tridiag(-2, 4, -2) with top eigenvalue 4 + 4cos(π/(k+1)).
        for k in [2usize, 3, 4, 7, 10, 20] {
            let r = hessian_norm_report(k, &prob(1, 1)).unwrap();
            let exact = 4.0 + 4.0 * (std::f64::consts::PI / (k as f64 + 1.0)).cos();
            assert!(
                (r.estimate - exact).abs() < 1e-6,
                "k={k}: {} vs {exact}",
                r.estimate
            );
        }
    }

    #[test]
    fn small_k_closed_forms_match_power_iteration() {
        for &(a, b) in &TEST_PS {
            let p = prob(a, b);
            let closed = hessian_norm_report(3, &p).unwrap().estimate;
            // Power iteration on k = 3 through the generic path.
            let s = rational::to_f64(&two_p_minus_one(&p));
            let pf = p.to_f64();
            let (d, o, r) = (4.0 * s / pf, -2.0 * s * s / (pf * pf), (1.0 - pf) / pf);
            let mut x = vec![1.0, 2.0, 3.0];
            let mut y = vec![0.0; 3];
            let mut est = 0.0;
            for _ in 0..5000 {
                hessian_apply(d, o, r, &x, &mut y);
                est = x.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>();
                let n = y.iter().map(|v| v * v).sum::<f64>().sqrt();
                x.iter_mut().zip(&y).for_each(|(xi, yi)| *xi = yi / n);
            }
            assert!((closed - est).abs() < 1e-9, "p={a}/{b}: {closed} vs {est}");
        }
    }

    #[test]
    fn row_sum_bound_matches_dense() {
        for &(a, b) in &TEST_PS {
            let p = prob(a, b);
            for k in 1..12 {
                let h = build_hessian(k, &p).unwrap();
                let dense = h
                    .iter()
                    .map(|row| row.iter().map(|v| v.abs()).sum::<Rational>())
                    .max()
                    .unwrap();
                assert_eq!(max_row_sum(k, &p).unwrap(), dense);
            }
        }
    }

    proptest! {
        #[test]
        fn identity_residual_is_zero(
            n in 2u64..80,
            pi in 0usize..4,
            seed in prop::collection::btree_set(1u64..79, 1..12),
        ) {
            let l: Vec<u64> = seed.into_iter().filter(|&x| x < n).collect();
            prop_assume!(!l.is_empty());
            let (a, b) = TEST_PS[pi];
            let q = evaluate_quadratic_identity(n, &prob(a, b), &l).unwrap();
            prop_assert!(q.residual.is_zero());
            let env = make_finite_env(n, prob(a, b), &l).unwrap();
            prop_assert_eq!(&q.direct, &solve_expected_hitting(&env).v[0]);
        }
    }
}
