//! Split a formula into its odd and even parts, gate by gate.

use std::collections::HashMap;
use std::sync::Arc;

use crate::circuit::tree::{self, add_opt, constant, leaf, Formula, Node};
use crate::circuit::{Circuit, Gate, Shape};
use crate::poly::Coeff;

use super::{require_formula, require_no, TransformError};

type Pair = (Option<Formula>, Option<Formula>);

fn scaled_add(a: Option<Formula>, b: Option<Formula>, s: &Option<[Coeff; 2]>) -> Option<Formula> {
    match s {
        None => add_opt(a, b),
        Some(sc) => match (a, b) {
            (Some(x), Some(y)) => Some(Arc::new(Node::Add(x, y, Some(sc.clone())))),
            (Some(x), None) => Some(Arc::new(Node::Add(x, tree::zero_leaf(), Some([sc[0].clone(), Coeff::zero()])))),
            (None, Some(y)) => Some(Arc::new(Node::Add(tree::zero_leaf(), y, Some([Coeff::zero(), sc[1].clone()])))),
            (None, None) => None,
        },
    }
}

fn prod(a: &Option<Formula>, b: &Option<Formula>, s: &Option<[Coeff; 2]>) -> Option<Formula> {
    Some(Arc::new(Node::Mul2(a.clone()?, b.clone()?, s.clone())))
}

fn prod3(a: &Option<Formula>, b: &Option<Formula>, c: &Option<Formula>) -> Option<Formula> {
    Some(tree::mul3(a.clone()?, b.clone()?, c.clone()?))
}

/// `(odd part, even part)` of the root; every node of either output is parity-homogeneous.
pub fn parity_tree(f: &Formula) -> Result<Pair, TransformError> {
    fn go(f: &Formula, memo: &mut HashMap<usize, Pair>) -> Result<Pair, TransformError> {
        let k = Arc::as_ptr(f) as usize;
        if let Some(r) = memo.get(&k) {
            return Ok(r.clone());
        }
        let r = match &**f {
            Node::Input { form, constant: c } => (
                (!form.is_zero()).then(|| leaf(form.clone())),
                (!c.is_zero()).then(|| constant(c.clone())),
            ),
            Node::Alpha => (None, Some(f.clone())),
            Node::Z => (Some(f.clone()), None),
            Node::Add(a, b, s) => {
                let (oa, ea) = go(a, memo)?;
                let (ob, eb) = go(b, memo)?;
                (scaled_add(oa, ob, s), scaled_add(ea, eb, s))
            }
            Node::Mul2(a, b, s) => {
                let (oa, ea) = go(a, memo)?;
                let (ob, eb) = go(b, memo)?;
                (
                    add_opt(prod(&oa, &eb, s), prod(&ea, &ob, s)),
                    add_opt(prod(&oa, &ob, s), prod(&ea, &eb, s)),
                )
            }
            Node::Mul3(a, b, c) => {
                let (oa, ea) = go(a, memo)?;
                let (ob, eb) = go(b, memo)?;
                let (oc, ec) = go(c, memo)?;
                let odd = tree::sum(vec![
                    prod3(&oa, &ob, &oc),
                    prod3(&oa, &eb, &ec),
                    prod3(&ea, &ob, &ec),
                    prod3(&ea, &eb, &oc),
                ]);
                let even = tree::sum(vec![
                    prod3(&oa, &ob, &ec),
                    prod3(&oa, &eb, &oc),
                    prod3(&ea, &ob, &oc),
                    prod3(&ea, &eb, &ec),
                ]);
                (odd, even)
            }
            Node::NegCube(..) => {
                return super::precondition("parity", "negcube gates are not supported")
            }
        };
        memo.insert(k, r.clone());
        Ok(r)
    }
    go(f, &mut HashMap::new())
}

/// Odd and even roots as separate formulas.
#[derive(Clone, Debug)]
pub struct ParitySplit {
    pub odd: Circuit,
    pub even: Circuit,
}

pub fn parity(c: &Circuit) -> Result<ParitySplit, TransformError> {
    require_formula(c, "parity")?;
    require_no(c, "parity", |g| matches!(g, Gate::NegCube { .. }), "a negcube gate")?;
    let (o, e) = parity_tree(&c.to_tree())?;
    Ok(ParitySplit {
        odd: tree::to_circuit_opt(&o, Shape::Formula, c.basis)?,
        even: tree::to_circuit_opt(&e, Shape::Formula, c.basis)?,
    })
}

/// Syntactic parity of an IHL parity-homogeneous node: `true` for odd.
pub(super) fn node_parity(f: &Formula, memo: &mut HashMap<usize, bool>) -> bool {
    let k = Arc::as_ptr(f) as usize;
    if let Some(&p) = memo.get(&k) {
        return p;
    }
    let p = match &**f {
        Node::Input { form, .. } => !form.is_zero(),
        Node::Alpha => false,
        Node::Z => true,
        Node::Add(a, _, _) => node_parity(a, memo),
        Node::Mul2(a, b, _) => node_parity(a, memo) ^ node_parity(b, memo),
        Node::Mul3(a, b, c) => node_parity(a, memo) ^ node_parity(b, memo) ^ node_parity(c, memo),
        Node::NegCube(a, _) => node_parity(a, memo),
    };
    memo.insert(k, p);
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Predicate;
    use crate::poly::Polynomial;

    #[test]
    fn mixed_parity_split() {
        let c = Circuit::parse("shape formula\ngate a = input x1\ngate b = input x1\ngate d = input x2\ngate m = mul b d\ngate s = add a m\noutput s").unwrap();
        let split = parity(&c).unwrap();
        assert_eq!(split.odd.eval(), Polynomial::x(1));
        assert_eq!(split.even.eval(), Polynomial::parse("x1*x2").unwrap());
        assert!(split.odd.validate(Predicate::ParityHomogeneous).is_ok());
        assert!(split.even.validate(Predicate::ParityHomogeneous).is_ok());
    }

    #[test]
    fn odd_input_has_zero_even_root() {
        let c = Circuit::parse("shape formula\nbasis arity3\ngate a = input x1\ngate b = input x2\ngate d = input x3\ngate m = mul3 a b d\noutput m").unwrap();
        let split = parity(&c).unwrap();
        assert!(split.even.eval().is_zero());
        assert_eq!(split.odd.eval(), c.eval());
    }
}
