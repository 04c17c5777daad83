//! Depth reduction for graded arity-3 IHL formulas.
//!
//! With a separator `v` below a product `p = v*x*y`, the formula is linear in
//! `v*x`: `F = (v*x) * (F(1,1) - F(0,0)) + F(0,0)`. Here `F(1,1) - F(0,0)` is
//! built directly as `G`: the root-to-`p` path with sums collapsed onto the
//! path and `p` replaced by `y`, which keeps every piece graded.


use crate::circuit::tree::{self, add, mul3, Formula, Node};
use crate::circuit::{Basis, Circuit, Gate, Predicate};

use super::brent::{replace_on_path, separator};
use super::{lift, precondition, require, require_formula, require_no, TransformError};

/// One recursion step as audited against the size and depth recursions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Brent3Step {
    pub size: usize,
    /// 1: only sums above the separator; 2: separator under a product;
    /// 3: separator under sums below a product.
    pub case: u8,
    pub piece_sizes: Vec<usize>,
    pub piece_out_sizes: Vec<usize>,
    pub piece_out_depths: Vec<usize>,
    pub out_size: usize,
    pub out_depth: usize,
}

impl Brent3Step {
    /// Pieces fit in `ceil(2s/3)`, there are at most five, and
    /// `size <= sum + 3`, `depth <= max + 2`.
    pub fn ok(&self) -> bool {
        let window = (2 * self.size).div_ceil(3);
        self.piece_sizes.iter().all(|&p| p <= window)
            && self.piece_sizes.len() <= 5
            && self.out_size <= self.piece_out_sizes.iter().sum::<usize>() + 3
            && self.out_depth <= self.piece_out_depths.iter().copied().max().unwrap_or(0) + 2
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Brent3Audit {
    pub steps: Vec<Brent3Step>,
}

impl Brent3Audit {
    pub fn violations(&self) -> usize {
        self.steps.iter().filter(|s| !s.ok()).count()
    }

    pub fn all_ok(&self) -> bool {
        self.violations() == 0
    }
}

/// Rebuild the root with the end of `path` replaced by `sub`, keeping only the
/// on-path child of every sum.
fn collapse(path: &[(Formula, usize)], sub: Formula) -> Formula {
    let mut cur = sub;
    for (node, idx) in path.iter().rev() {
        cur = match &**node {
            Node::Add(..) => cur,
            Node::Mul3(a, b, c) => {
                let mut k = [a.clone(), b.clone(), c.clone()];
                k[*idx] = cur;
                let [a, b, c] = k;
                mul3(a, b, c)
            }
            other => unreachable!("unexpected node on an arity-3 path: {:?}", other),
        };
    }
    cur
}

/// The two children of a product other than `idx`, larger first (first on ties).
fn others(node: &Formula, idx: usize) -> (Formula, Formula) {
    let ch: Vec<Formula> = node.children().into_iter().cloned().collect();
    let rest: Vec<&Formula> = (0..3).filter(|&i| i != idx).map(|i| &ch[i]).collect();
    if tree::size(rest[1]) > tree::size(rest[0]) {
        (rest[1].clone(), rest[0].clone())
    } else {
        (rest[0].clone(), rest[1].clone())
    }
}

pub fn brent3_tree(f: &Formula, audit: &mut Brent3Audit) -> Formula {
    let s = tree::size(f);
    if s <= 3 || tree::depth(f) <= 1 {
        return f.clone();
    }
    let (path, v) = separator(f);
    let (last, last_idx) = path.last().expect("root exceeds the window");
    let prod_at = path.iter().rposition(|(n, _)| matches!(&**n, Node::Mul3(..)));
    let (case, pieces): (u8, Vec<Option<Formula>>) = match prod_at {
        None => (1, vec![Some(v.clone()), replace_on_path(&path, None)]),
        Some(j) if j + 1 == path.len() => {
            let (x, y) = others(last, *last_idx);
            let g = collapse(&path[..j], y);
            (2, vec![Some(g), Some(v.clone()), Some(x), replace_on_path(&path[..j], None)])
        }
        Some(j) => {
            let (q, qidx) = &path[j];
            let (x, y) = others(q, *qidx);
            let r = replace_on_path(&path[j + 1..], None);
            let g = collapse(&path[..j], y);
            let f00 = replace_on_path(&path[..=j], r);
            (3, vec![Some(g), Some(v.clone()), Some(x), f00])
        }
    };
    let outs: Vec<Option<Formula>> = pieces
        .iter()
        .map(|p| p.as_ref().map(|p| brent3_tree(p, audit)))
        .collect();
    let out = match case {
        1 => match &outs[1] {
            Some(rest) => add(outs[0].clone().unwrap(), rest.clone()),
            None => outs[0].clone().unwrap(),
        },
        _ => {
            let m = mul3(outs[0].clone().unwrap(), outs[1].clone().unwrap(), outs[2].clone().unwrap());
            match &outs[3] {
                Some(rest) => add(m, rest.clone()),
                None => m,
            }
        }
    };
    let present: Vec<&Formula> = outs.iter().flatten().collect();
    audit.steps.push(Brent3Step {
        size: s,
        case,
        piece_sizes: pieces.iter().flatten().map(tree::size).collect(),
        piece_out_sizes: present.iter().map(|p| tree::size(p)).collect(),
        piece_out_depths: present.iter().map(|p| tree::depth(p)).collect(),
        out_size: tree::size(&out),
        out_depth: tree::depth(&out),
    });
    out
}

pub fn brent3(c: &Circuit) -> Result<(Circuit, Brent3Audit), TransformError> {
    require_formula(c, "brent3")?;
    require(c, Predicate::Ihl, "brent3")?;
    require(c, Predicate::Arity3, "brent3")?;
    require(c, Predicate::Graded, "brent3")?;
    require_no(c, "brent3", |g| matches!(g, Gate::Add { scalars: Some(_), .. }), "a scaled sum")?;
    if c.gates.iter().any(|g| matches!(g, Gate::Alpha | Gate::Z)) {
        return precondition("brent3", "alpha and z leaves are not allowed");
    }
    let mut audit = Brent3Audit::default();
    let out = lift(c, Basis::Arity3, |f| Ok(Some(brent3_tree(f, &mut audit))))?;
    Ok((out, audit))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::tree::var;
    use crate::poly::Var;
    use std::sync::Arc;

    fn comb(n: usize) -> Formula {
        let mut f = var(Var::x(1));
        for i in 0..n {
            f = mul3(f, var(Var::x((i % 4) as u64 + 2)), var(Var::x((i % 3) as u64 + 1)));
        }
        f
    }

    #[test]
    fn small_unchanged() {
        let f = mul3(var(Var::x(1)), var(Var::x(2)), var(Var::x(3)));
        let mut a = Brent3Audit::default();
        assert!(Arc::ptr_eq(&brent3_tree(&f, &mut a), &f));
        assert!(a.steps.is_empty());
    }

    #[test]
    fn deep_comb() {
        let f = comb(40);
        let mut a = Brent3Audit::default();
        let g = brent3_tree(&f, &mut a);
        assert_eq!(tree::eval(&g), tree::eval(&f));
        let s = tree::size(&f) as f64;
        assert!((tree::depth(&g) as f64) <= 2.0 * s.ln() / 1.5f64.ln() + 4.0);
        assert!(a.all_ok(), "{:?}", a.steps.iter().find(|s| !s.ok()));
        let c = tree::to_circuit(&g, crate::circuit::Shape::Formula, Basis::Arity3).unwrap();
        assert!(c.validate(Predicate::Graded).is_ok());
    }

    #[test]
    fn sums_under_products() {
        // ((x1 + x2) * x3 * x4 + x5*x6*x7) * x1 * x2, with sums on the separator path.
        let x = |i| var(Var::x(i));
        let inner = add(mul3(add(x(1), x(2)), x(3), x(4)), mul3(x(5), x(6), x(7)));
        let f = mul3(add(inner.clone(), mul3(x(2), x(2), x(2))), add(x(1), x(3)), x(2));
        let mut a = Brent3Audit::default();
        let g = brent3_tree(&f, &mut a);
        assert_eq!(tree::eval(&g), tree::eval(&f));
        assert!(a.all_ok());
    }
}
