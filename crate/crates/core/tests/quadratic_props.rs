use driftwalk::environment::make_finite_env;
use driftwalk::exact::{closed_form_expectation, solve_expected_hitting};
use driftwalk::quadratic::{
    build_hessian, hessian_determinant, integer_b, is_positive_definite, minimum_value,
    DriftQuadratic,
};
use driftwalk::Probability;
use proptest::prelude::*;

const TEST_PS: [(i64, i64); 4] = [(3, 5), (3, 4), (9, 10), (1, 1)];

fn prob(i: usize) -> Probability {
    let (a, b) = TEST_PS[i];
    Probability::from_ratio(a, b).unwrap()
}

#[test]
fn hessians_are_positive_definite_up_to_thirty() {
    for i in 0..TEST_PS.len() {
        for k in 1..=30 {
            assert!(
                is_positive_definite(&build_hessian(k, &prob(i)).unwrap()),
                "k={k}"
            );
        }
    }
}

#[test]
fn determinant_routes_agree() {
    for i in 0..TEST_PS.len() {
        for k in 1..=12 {
            hessian_determinant(k, &prob(i)).unwrap();
        }
    }
}

proptest! {
    #[test]
    fn perturbing_the_optimum_costs(
        n in 2u64..120,
        k in 1usize..10,
        pi in 0usize..4,
        delta in prop::collection::vec(-3i64..=3, 10),
    ) {
        let p = prob(pi);
        prop_assume!(k < n as usize);
        let Some(b) = integer_b(n, &p, k).unwrap() else { return Ok(()); };
        let moved: Vec<i64> = b.iter().zip(&delta).map(|(&x, d)| x as i64 + d).collect();
        prop_assume!(delta[..k].iter().any(|&d| d != 0));
        prop_assume!(moved[0] > 0 && moved[k - 1] < n as i64 && moved.windows(2).all(|w| w[0] < w[1]));
        let l: Vec<u64> = moved.iter().map(|&x| x as u64).collect();
        let min = minimum_value(n, &p, k);
        prop_assert_eq!(closed_form_expectation(n, &p, &b).unwrap(), min.clone());
        prop_assert!(closed_form_expectation(n, &p, &l).unwrap() > min);
    }

    #[test]
    fn quadratic_form_matches_solver(
        n in 2u64..150,
        pi in 0usize..4,
        raw in prop::collection::btree_set(1u64..149, 1..15),
    ) {
        let l: Vec<u64> = raw.into_iter().filter(|&x| x < n).collect();
        prop_assume!(!l.is_empty());
        let p = prob(pi);
        let q = DriftQuadratic::new(n, &p, l.len()).unwrap();
        let env = make_finite_env(n, p, &l).unwrap();
        prop_assert_eq!(q.eval(&l), solve_expected_hitting(&env).v[0].clone());
    }
}
