//! Arity-3 products to sums of negated cubes:
//! `24xyz = (x+y+z)^3 - (x+y-z)^3 - (x-y+z)^3 + (x-y-z)^3`.

use std::collections::HashMap;
use std::sync::Arc;

use crate::circuit::tree::{add, negcube, Formula, Node};
use crate::circuit::{Basis, Circuit, Gate};
use crate::poly::Coeff;

use super::{lift, require_formula, require_no, TransformError};

fn signed_add(a: Formula, b: Formula, minus: bool) -> Formula {
    if minus {
        Arc::new(Node::Add(a, b, Some([Coeff::one(), Coeff::int(-1)])))
    } else {
        add(a, b)
    }
}

pub fn add_negcube_tree(f: &Formula) -> Formula {
    fn go(f: &Formula, memo: &mut HashMap<usize, Formula>) -> Formula {
        let k = Arc::as_ptr(f) as usize;
        if let Some(r) = memo.get(&k) {
            return r.clone();
        }
        let r = match &**f {
            Node::Input { .. } | Node::Alpha | Node::Z => f.clone(),
            Node::Add(a, b, s) => Arc::new(Node::Add(go(a, memo), go(b, memo), s.clone())),
            Node::Mul3(a, b, c) => {
                let (a, b, c) = (go(a, memo), go(b, memo), go(c, memo));
                let cube = |mb: bool, mc: bool, t: Coeff| {
                    let s = signed_add(signed_add(a.clone(), b.clone(), mb), c.clone(), mc);
                    negcube(s, Some(t))
                };
                let n1 = cube(false, false, Coeff::rational(-1, 24));
                let n2 = cube(false, true, Coeff::rational(1, 24));
                let n3 = cube(true, false, Coeff::rational(1, 24));
                let n4 = cube(true, true, Coeff::rational(-1, 24));
                add(add(n1, n2), add(n3, n4))
            }
            Node::NegCube(a, s) => negcube(go(a, memo), s.clone()),
            Node::Mul2(..) => unreachable!("checked by the caller"),
        };
        memo.insert(k, r.clone());
        r
    }
    go(f, &mut HashMap::new())
}

pub fn add_negcube(c: &Circuit) -> Result<Circuit, TransformError> {
    require_formula(c, "add-negcube")?;
    require_no(c, "add-negcube", |g| matches!(g, Gate::Mul2 { .. }), "a binary product")?;
    lift(c, Basis::AddNegCube, |f| Ok(Some(add_negcube_tree(f))))
}
