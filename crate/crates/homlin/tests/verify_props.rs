use proptest::prelude::*;

use homlin::matrixword::{compile_continuant_odd, compile_trace3};
use homlin::poly::{Coeff, Field, Polynomial, DEFAULT_PRIME};
use homlin::random::{self, rng};
use homlin::transforms::{add_negcube, brent3};
use homlin::verify::{verify_border, verify_exact, verify_random, BorderInput, BorderOpts};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn random_mode_agrees_with_exact(seed in any::<u64>(), point_seed in any::<u64>(), perturb in any::<bool>(), rational in any::<bool>()) {
        let mut r = rng(seed);
        let a = random::affine_formula(&mut r, 3, 3, 4).eval();
        let b = if perturb { &a + &random::ihl_formula(&mut r, 1, 3, 2).eval() } else { a.clone() };
        let field = if rational { Field::Rational } else { Field::Prime(DEFAULT_PRIME) };
        let exact = verify_exact(&a, &b);
        let rand = verify_random(&a, &b, 10, field, point_seed);
        if exact.pass {
            prop_assert!(rand.pass);
        }
        if !rand.pass {
            prop_assert!(!exact.pass);
            prop_assert!(rand.witness.is_some());
        }
        if !exact.pass {
            prop_assert!(exact.witness.is_some());
        }
    }

    #[test]
    fn trace_border_survives_truncation(seed in any::<u64>(), extra in 0i64..4) {
        let c = random::ihl_formula(&mut rng(seed), 2, 3, 4);
        let w = compile_trace3(&c).unwrap();
        let f = c.eval();
        prop_assert!(verify_border(BorderInput::Word(&w), &f, BorderOpts::default()).pass);
        // Truncation acts on the scaled value, where the limit is the eps^0 part.
        let k = 1 + extra;
        let cut = verify_border(BorderInput::Word(&w), &f, BorderOpts { mod_eps: Some(k), ..Default::default() });
        prop_assert!(cut.pass, "K = {}: {}", k, cut);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10))]

    #[test]
    fn continuant_border_survives_truncation(seed in any::<u64>(), extra in 0i64..3) {
        let c = random::graded_arity3_formula(&mut rng(seed), 3, 8, 3);
        let (b, _) = brent3(&c).unwrap();
        let (proj, _) = compile_continuant_odd(&add_negcube(&b).unwrap(), 3).unwrap();
        let f = c.eval();
        let opts = BorderOpts { degree: Some(3), ..Default::default() };
        prop_assert!(verify_border(BorderInput::Projection(&proj), &f, opts).pass);
        let cut = verify_border(BorderInput::Projection(&proj), &f, BorderOpts { mod_eps: Some(1 + extra), ..opts });
        prop_assert!(cut.pass);
    }
}

#[test]
fn wrong_scalar_diverges() {
    let c = random::ihl_formula(&mut rng(4), 2, 3, 3);
    let mut w = compile_trace3(&c).unwrap();
    w.scalar = Coeff::eps(-3);
    let r = verify_border(BorderInput::Word(&w), &c.eval(), BorderOpts::default());
    assert!(!r.pass && r.witness.is_some());
    assert!(verify_exact(&Polynomial::zero(), &Polynomial::parse("0").unwrap()).pass);
}
