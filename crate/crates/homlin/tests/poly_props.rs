use std::collections::BTreeMap;

use proptest::prelude::*;

use homlin::poly::{Coeff, LinearForm, Monomial, Polynomial, Var};

fn monomial(exps: &[u32]) -> Monomial {
    Monomial::from_pairs(exps.iter().enumerate().filter(|(_, &e)| e > 0).map(|(i, &e)| (Var::x(i as u64 + 1), e)).collect())
}

fn poly() -> impl Strategy<Value = Polynomial> {
    prop::collection::vec((prop::collection::vec(0u32..3, 3), -5i64..=5), 0..5)
        .prop_map(|ts| Polynomial::from_terms(ts.iter().map(|(e, c)| (monomial(e), Coeff::int(*c)))))
}

/// Homogeneous of degree `d` in x1..x3, possibly zero.
fn homogeneous(d: u32) -> impl Strategy<Value = Polynomial> {
    prop::collection::vec((0..=d, 0..=d, -4i64..=4), 1..5).prop_map(move |ts| {
        Polynomial::from_terms(
            ts.iter().filter(|(a, b, _)| a + b <= d).map(|&(a, b, c)| (monomial(&[a, b, d - a - b]), Coeff::int(c))),
        )
    })
}

fn linear_form() -> impl Strategy<Value = LinearForm> {
    prop::collection::vec((1u64..=3, -3i64..=3), 1..4)
        .prop_map(|ts| LinearForm::from_terms(ts.into_iter().map(|(v, c)| (Var::x(v), Coeff::int(c)))))
}

/// Coefficients are small Laurent polynomials in eps.
fn eps_poly() -> impl Strategy<Value = Polynomial> {
    prop::collection::vec((prop::collection::vec(0u32..2, 2), -2i64..=3, -3i64..=3), 0..6).prop_map(|ts| {
        Polynomial::from_terms(ts.iter().map(|(e, k, c)| (monomial(e), &Coeff::eps(*k) * &Coeff::int(*c))))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn ring_axioms(a in poly(), b in poly(), c in poly()) {
        prop_assert_eq!(&(&a + &b) + &c, &a + &(&b + &c));
        prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
        prop_assert_eq!(&a * &b, &b * &a);
        prop_assert!((&a - &a).is_zero());
    }

    #[test]
    fn degree_adds(a in poly(), b in poly()) {
        prop_assume!(!a.is_zero() && !b.is_zero());
        prop_assert_eq!((&a * &b).degree(), Some(a.degree().unwrap() + b.degree().unwrap()));
    }

    #[test]
    fn euler_identity((d, p) in (1u32..5).prop_flat_map(|d| (Just(d), homogeneous(d)))) {
        let mut sum = Polynomial::zero();
        for i in 1..=3 {
            let v = Var::x(i);
            sum += &(&Polynomial::var(v) * &p.partial_derivative(v));
        }
        prop_assert_eq!(sum, p.scale(&Coeff::int(i64::from(d))));
    }

    #[test]
    fn linear_substitution_keeps_degree(p in homogeneous(3), ls in prop::collection::vec(linear_form(), 3)) {
        let sigma: BTreeMap<Var, Polynomial> =
            ls.iter().enumerate().map(|(i, l)| (Var::x(i as u64 + 1), l.to_polynomial())).collect();
        let q = p.substitute(&sigma);
        prop_assert!(q.is_zero() || (q.is_homogeneous() && q.degree() == Some(3)));
    }

    #[test]
    fn truncation_keeps_limit(p in eps_poly(), k in 1i64..5) {
        if let Ok(lim) = p.eps_limit() {
            let cut = p.map_coeffs(|c| c.mod_eps(k));
            prop_assert_eq!(cut.eps_limit().unwrap(), lim);
        }
    }

    #[test]
    fn text_round_trip(p in eps_poly()) {
        prop_assert_eq!(Polynomial::parse(&p.to_string()).unwrap(), p);
    }
}
