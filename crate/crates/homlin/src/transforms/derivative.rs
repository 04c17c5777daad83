//! Formal partial derivatives by the sum and product rules.

use std::collections::HashMap;
use std::sync::Arc;

use crate::circuit::tree::{self, add_opt, constant, Formula, Node};
use crate::circuit::{Circuit, Gate};
use crate::poly::{Coeff, Var};

use super::{lift, require_formula, require_no, TransformError};

pub fn derivative_tree(f: &Formula, v: Var) -> Option<Formula> {
    fn go(f: &Formula, v: Var, memo: &mut HashMap<usize, Option<Formula>>) -> Option<Formula> {
        let k = Arc::as_ptr(f) as usize;
        if let Some(r) = memo.get(&k) {
            return r.clone();
        }
        let r = match &**f {
            Node::Input { form, .. } => {
                let c = form.coeff(v);
                (!c.is_zero()).then(|| constant(c))
            }
            Node::Alpha => None,
            Node::Z => (v == Var::z()).then(|| constant(Coeff::one())),
            Node::Add(a, b, s) => {
                let (da, db) = (go(a, v, memo), go(b, v, memo));
                match s {
                    None => add_opt(da, db),
                    Some(sc) => match (da, db) {
                        (None, None) => None,
                        (x, y) => Some(Arc::new(Node::Add(
                            x.unwrap_or_else(tree::zero_leaf),
                            y.unwrap_or_else(tree::zero_leaf),
                            Some(sc.clone()),
                        ))),
                    },
                }
            }
            Node::Mul2(a, b, s) => {
                let l = go(a, v, memo).map(|da| Arc::new(Node::Mul2(da, b.clone(), s.clone())));
                let r = go(b, v, memo).map(|db| Arc::new(Node::Mul2(a.clone(), db, s.clone())));
                add_opt(l, r)
            }
            Node::Mul3(a, b, c) => {
                let t1 = go(a, v, memo).map(|d| tree::mul3(d, b.clone(), c.clone()));
                let t2 = go(b, v, memo).map(|d| tree::mul3(a.clone(), d, c.clone()));
                let t3 = go(c, v, memo).map(|d| tree::mul3(a.clone(), b.clone(), d));
                add_opt(add_opt(t1, t2), t3)
            }
            Node::NegCube(..) => unreachable!("checked by the caller"),
        };
        memo.insert(k, r.clone());
        r
    }
    go(f, v, &mut HashMap::new())
}

pub fn derivative(c: &Circuit, v: Var) -> Result<Circuit, TransformError> {
    require_formula(c, "derivative")?;
    require_no(c, "derivative", |g| matches!(g, Gate::NegCube { .. }), "a negcube gate")?;
    lift(c, c.basis, |f| Ok(derivative_tree(f, v)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::tree::{add, mul, var};
    use crate::poly::Polynomial;

    #[test]
    fn examples() {
        let x = |i| var(Var::x(i));
        let d = derivative_tree(&mul(x(1), x(2)), Var::x(1)).unwrap();
        assert_eq!(tree::eval(&d), Polynomial::x(2));
        assert!(derivative_tree(&add(x(1), x(2)), Var::x(3)).is_none());
        let f = mul(x(1), mul(x(1), x(2)));
        let d = derivative_tree(&f, Var::x(1)).unwrap();
        assert_eq!(tree::eval(&d), Polynomial::parse("2*x1*x2").unwrap());
        assert!(tree::depth(&d) <= 2 * tree::depth(&f));
    }
}
