//! Every pass preserves the computed polynomial (up to its documented
//! change), keeps its output in the declared basis and meets its bound.

use proptest::prelude::*;

use homlin::circuit::{Basis, Circuit, Gate, Predicate};
use homlin::poly::{Coeff, Polynomial, Var};
use homlin::random::{self, rng};
use homlin::transforms::{run_pass, PassArgs, PassOutput};

fn run(name: &str, c: &Circuit, args: &PassArgs) -> (PassOutput, bool) {
    let (out, rep) = run_pass(name, c, args).unwrap_or_else(|e| panic!("{} failed: {}", name, e));
    (out, rep.satisfied)
}

fn circuit(out: &PassOutput) -> &Circuit {
    out.circuit().expect("pass produced a circuit")
}

fn no_binary_products(c: &Circuit) -> bool {
    let live = c.reachable();
    c.gates.iter().enumerate().all(|(i, g)| !live[i] || !matches!(g, Gate::Mul2 { .. } | Gate::Mul3 { .. }))
}

fn without_constant(f: &Polynomial) -> Polynomial {
    f - &Polynomial::constant(f.constant_term())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn rescale_scales(seed in any::<u64>(), depth in 0usize..6, k in -3i64..=3) {
        let c = random::affine_formula(&mut rng(seed), depth, 4, 5);
        let a = Coeff::rational(k, 2);
        let (out, ok) = run("rescale", &c, &PassArgs { scale: Some(a.clone()), var: None });
        prop_assert!(ok);
        prop_assert_eq!(out.eval(), c.eval().scale(&a));
    }

    #[test]
    fn ihl_formula_drops_constant(seed in any::<u64>(), depth in 0usize..6) {
        let c = random::affine_formula(&mut rng(seed), depth, 4, 5);
        let (out, ok) = run("ihl-formula", &c, &PassArgs::default());
        prop_assert!(ok);
        let o = circuit(&out);
        prop_assert!(o.validate(Predicate::Ihl).is_ok() && o.validate(Predicate::FormulaTree).is_ok());
        prop_assert_eq!(o.eval(), without_constant(&c.eval()));
    }

    #[test]
    fn ihl_circuit_drops_constant(seed in any::<u64>(), size in 1usize..=60) {
        let c = random::affine_circuit(&mut rng(seed), size, 5, 6);
        let (out, ok) = run("ihl-circuit", &c, &PassArgs::default());
        prop_assert!(ok);
        let o = circuit(&out);
        prop_assert!(o.validate(Predicate::Ihl).is_ok());
        prop_assert_eq!(o.eval(), without_constant(&c.eval()));
    }

    #[test]
    fn brent_preserves(seed in any::<u64>(), depth in 0usize..7) {
        let c = random::affine_formula(&mut rng(seed), depth, 4, 6);
        let (out, ok) = run("brent", &c, &PassArgs::default());
        prop_assert!(ok);
        prop_assert!(circuit(&out).validate(Predicate::FormulaTree).is_ok());
        prop_assert_eq!(out.eval(), c.eval());
    }

    #[test]
    fn parity_splits(seed in any::<u64>(), depth in 0usize..5) {
        let c = random::affine_formula(&mut rng(seed), depth, 3, 5);
        let (out, ok) = run("parity", &c, &PassArgs::default());
        prop_assert!(ok);
        let PassOutput::Split(s) = &out else { panic!("parity returns a split") };
        let (odd, even) = c.eval().parity_parts();
        prop_assert_eq!(s.odd.eval(), odd);
        prop_assert_eq!(s.even.eval(), even);
    }

    #[test]
    fn derivative_differentiates(seed in any::<u64>(), depth in 0usize..6, v in 1u64..=3) {
        let c = random::affine_formula(&mut rng(seed), depth, 3, 5);
        let x = Var::x(v);
        let (out, ok) = run("derivative", &c, &PassArgs { scale: None, var: Some(x) });
        prop_assert!(ok);
        prop_assert_eq!(out.eval(), c.eval().partial_derivative(x));
    }

    #[test]
    fn vf_reassembles(seed in any::<u64>(), depth in 0usize..5) {
        let c = random::affine_formula(&mut rng(seed), depth, 4, 5);
        let (out, ok) = run("vf-to-v3p", &c, &PassArgs::default());
        prop_assert!(ok);
        let PassOutput::Graded(g) = &out else { panic!("vf-to-v3p returns a graded representation") };
        prop_assert!(g.validate().is_ok());
        prop_assert_eq!(g.reassemble(), c.eval());
    }

    #[test]
    fn negcube_and_brent3_preserve(seed in any::<u64>(), d in prop::sample::select(vec![1u32, 3, 5, 7]), budget in 1usize..=60) {
        let c = random::graded_arity3_formula(&mut rng(seed), d, budget, 4);
        let (b, ok) = run("brent3", &c, &PassArgs::default());
        prop_assert!(ok);
        let b = circuit(&b).clone();
        prop_assert_eq!(b.basis, Basis::Arity3);
        prop_assert!(b.validate(Predicate::Arity3).is_ok() && b.validate(Predicate::Ihl).is_ok());
        prop_assert_eq!(b.eval(), c.eval());
        let (n, ok) = run("add-negcube", &b, &PassArgs::default());
        prop_assert!(ok);
        prop_assert!(no_binary_products(circuit(&n)));
        prop_assert_eq!(n.eval(), c.eval());
    }

    #[test]
    fn vsbr3_preserves(seed in any::<u64>(), size in 4usize..=60) {
        let c = random::homogeneous_arity3_circuit(&mut rng(seed), size, 4, 7);
        let (out, ok) = run("vsbr3", &c, &PassArgs::default());
        prop_assert!(ok);
        let o = circuit(&out);
        prop_assert!(o.validate(Predicate::Arity3).is_ok() && o.validate(Predicate::Ihl).is_ok());
        prop_assert_eq!(o.eval(), c.eval());
    }
}

#[test]
fn preconditions_refuse_wrong_basis() {
    let mut r = rng(9);
    let arity2 = random::ihl_formula(&mut r, 3, 3, 4);
    let arity3 = random::graded_arity3_formula(&mut r, 3, 10, 3);
    for name in ["brent3", "add-negcube", "vsbr3"] {
        if arity2.gates.iter().any(|g| matches!(g, Gate::Mul2 { .. })) {
            assert!(run_pass(name, &arity2, &PassArgs::default()).is_err(), "{} accepted an arity-2 input", name);
        }
    }
    for name in ["brent", "ihl-formula", "vf-to-v3p"] {
        assert!(run_pass(name, &arity3, &PassArgs::default()).is_err(), "{} accepted an arity-3 input", name);
    }
    assert!(run_pass("derivative", &arity2, &PassArgs::default()).is_err());
    assert!(run_pass("no-such-pass", &arity2, &PassArgs::default()).is_err());
}
