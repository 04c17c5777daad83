//! Tree view of formulas with shared, immutable nodes.
//!
//! Passes that rewrite formulas work here and use `Option<Formula>` for
//! "possibly zero", so zero subtrees vanish as they are built.

use std::collections::HashMap;
use std::sync::Arc;

use crate::poly::{Coeff, LinearForm, Polynomial, Var};

use super::{Basis, Builder, Circuit, CircuitError, Gate, Shape};

pub type Formula = Arc<Node>;

#[derive(Debug, PartialEq, Eq, Hash)]
pub enum Node {
    Input { form: LinearForm, constant: Coeff },
    Alpha,
    Z,
    Add(Formula, Formula, Option<[Coeff; 2]>),
    Mul2(Formula, Formula, Option<[Coeff; 2]>),
    Mul3(Formula, Formula, Formula),
    NegCube(Formula, Option<Coeff>),
}

impl Node {
    pub fn children(&self) -> Vec<&Formula> {
        match self {
            Node::Add(a, b, _) | Node::Mul2(a, b, _) => vec![a, b],
            Node::Mul3(a, b, c) => vec![a, b, c],
            Node::NegCube(a, _) => vec![a],
            _ => Vec::new(),
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, Node::Input { .. } | Node::Alpha | Node::Z)
    }
}

fn key(f: &Formula) -> usize {
    Arc::as_ptr(f) as usize
}

pub fn leaf(form: LinearForm) -> Formula {
    Arc::new(Node::Input { form, constant: Coeff::zero() })
}

pub fn var(v: Var) -> Formula {
    leaf(LinearForm::var(v))
}

pub fn input(form: LinearForm, constant: Coeff) -> Formula {
    Arc::new(Node::Input { form, constant })
}

pub fn constant(c: Coeff) -> Formula {
    input(LinearForm::zero(), c)
}

pub fn zero_leaf() -> Formula {
    constant(Coeff::zero())
}

pub fn add(a: Formula, b: Formula) -> Formula {
    Arc::new(Node::Add(a, b, None))
}

pub fn mul(a: Formula, b: Formula) -> Formula {
    Arc::new(Node::Mul2(a, b, None))
}

pub fn mul3(a: Formula, b: Formula, c: Formula) -> Formula {
    Arc::new(Node::Mul3(a, b, c))
}

pub fn negcube(a: Formula, s: Option<Coeff>) -> Formula {
    Arc::new(Node::NegCube(a, s))
}

/// Sum with zero-propagation.
pub fn add_opt(a: Option<Formula>, b: Option<Formula>) -> Option<Formula> {
    match (a, b) {
        (Some(a), Some(b)) => Some(add(a, b)),
        (a, None) => a,
        (None, b) => b,
    }
}

pub fn mul_opt(a: Option<Formula>, b: Option<Formula>) -> Option<Formula> {
    Some(mul(a?, b?))
}

pub fn mul3_opt(a: Option<Formula>, b: Option<Formula>, c: Option<Formula>) -> Option<Formula> {
    Some(mul3(a?, b?, c?))
}

/// Balanced binary sum of the nonzero items.
pub fn sum(items: Vec<Option<Formula>>) -> Option<Formula> {
    let mut items: Vec<Formula> = items.into_iter().flatten().collect();
    if items.is_empty() {
        return None;
    }
    while items.len() > 1 {
        let mut next = Vec::with_capacity(items.len().div_ceil(2));
        let mut it = items.into_iter();
        while let Some(a) = it.next() {
            match it.next() {
                Some(b) => next.push(add(a, b)),
                None => next.push(a),
            }
        }
        items = next;
    }
    items.pop()
}

/// Sum-of-monomials formula for `p`: each monomial is a balanced product of
/// variable leaves with its coefficient folded into the first leaf.
/// `None` for the zero polynomial.
pub fn from_polynomial(p: &Polynomial) -> Option<Formula> {
    let terms = p.terms().map(|(m, c)| {
        if m.is_one() {
            return Some(constant(c.clone()));
        }
        let mut leaves: Vec<Formula> = Vec::new();
        for &(v, e) in m.pairs() {
            for _ in 0..e {
                let form = if leaves.is_empty() { LinearForm::var(v).scale(c) } else { LinearForm::var(v) };
                leaves.push(leaf(form));
            }
        }
        while leaves.len() > 1 {
            let mut next = Vec::with_capacity(leaves.len().div_ceil(2));
            let mut it = leaves.into_iter();
            while let Some(a) = it.next() {
                next.push(match it.next() {
                    Some(b) => mul(a, b),
                    None => a,
                });
            }
            leaves = next;
        }
        leaves.pop()
    });
    sum(terms.collect())
}

/// Literal zero leaf.
pub fn is_zero_leaf(f: &Formula) -> bool {
    matches!(&**f, Node::Input { form, constant } if form.is_zero() && constant.is_zero())
}

/// Drop literal zero leaves by zero-propagation; `None` if the whole formula is zero.
pub fn nonzero(f: &Formula) -> Option<Formula> {
    fn go(f: &Formula, memo: &mut HashMap<usize, Option<Formula>>) -> Option<Formula> {
        if let Some(r) = memo.get(&key(f)) {
            return r.clone();
        }
        let r = match &**f {
            _ if is_zero_leaf(f) => None,
            Node::Input { .. } | Node::Alpha | Node::Z => Some(f.clone()),
            Node::Add(a, b, s) => match (go(a, memo), go(b, memo)) {
                (Some(x), Some(y)) if Arc::ptr_eq(&x, a) && Arc::ptr_eq(&y, b) => Some(f.clone()),
                (Some(x), Some(y)) => Some(Arc::new(Node::Add(x, y, s.clone()))),
                (Some(x), None) => Some(scale_edge(x, s.as_ref().map(|s| &s[0]))),
                (None, Some(y)) => Some(scale_edge(y, s.as_ref().map(|s| &s[1]))),
                (None, None) => None,
            },
            Node::Mul2(a, b, s) => {
                let (x, y) = (go(a, memo)?, go(b, memo)?);
                if Arc::ptr_eq(&x, a) && Arc::ptr_eq(&y, b) {
                    Some(f.clone())
                } else {
                    Some(Arc::new(Node::Mul2(x, y, s.clone())))
                }
            }
            Node::Mul3(a, b, c) => {
                let (x, y, z) = (go(a, memo)?, go(b, memo)?, go(c, memo)?);
                if Arc::ptr_eq(&x, a) && Arc::ptr_eq(&y, b) && Arc::ptr_eq(&z, c) {
                    Some(f.clone())
                } else {
                    Some(mul3(x, y, z))
                }
            }
            Node::NegCube(a, s) => {
                let x = go(a, memo)?;
                if Arc::ptr_eq(&x, a) {
                    Some(f.clone())
                } else {
                    Some(negcube(x, s.clone()))
                }
            }
        };
        memo.insert(key(f), r.clone());
        r
    }
    go(f, &mut HashMap::new())
}

/// Keep an edge scalar that survived the removal of its sibling.
fn scale_edge(f: Formula, s: Option<&Coeff>) -> Formula {
    match s {
        None => f,
        Some(s) if s.is_one() => f,
        Some(s) => Arc::new(Node::Add(f, zero_leaf(), Some([s.clone(), Coeff::zero()]))),
    }
}

/// Number of nodes of the tree unfolding (saturating).
pub fn size(f: &Formula) -> usize {
    fn go(f: &Formula, memo: &mut HashMap<usize, usize>) -> usize {
        if let Some(&s) = memo.get(&key(f)) {
            return s;
        }
        let s = f
            .children()
            .into_iter()
            .fold(1usize, |acc, c| acc.saturating_add(go(c, memo)));
        memo.insert(key(f), s);
        s
    }
    go(f, &mut HashMap::new())
}

pub fn depth(f: &Formula) -> usize {
    fn go(f: &Formula, memo: &mut HashMap<usize, usize>) -> usize {
        if let Some(&d) = memo.get(&key(f)) {
            return d;
        }
        let d = f.children().into_iter().map(|c| go(c, memo) + 1).max().unwrap_or(0);
        memo.insert(key(f), d);
        d
    }
    go(f, &mut HashMap::new())
}

/// Syntactic degree: leaves with a nonzero linear part count 1, sums take the maximum.
pub fn degree(f: &Formula) -> u32 {
    fn go(f: &Formula, memo: &mut HashMap<usize, u32>) -> u32 {
        if let Some(&d) = memo.get(&key(f)) {
            return d;
        }
        let d = match &**f {
            Node::Input { form, .. } => u32::from(!form.is_zero()),
            Node::Alpha => 0,
            Node::Z => 1,
            Node::Add(a, b, _) => go(a, memo).max(go(b, memo)),
            Node::Mul2(a, b, _) => go(a, memo) + go(b, memo),
            Node::Mul3(a, b, c) => go(a, memo) + go(b, memo) + go(c, memo),
            Node::NegCube(a, _) => 3 * go(a, memo),
        };
        memo.insert(key(f), d);
        d
    }
    go(f, &mut HashMap::new())
}

pub fn eval(f: &Formula) -> Polynomial {
    fn go(f: &Formula, memo: &mut HashMap<usize, Polynomial>) -> Polynomial {
        if let Some(p) = memo.get(&key(f)) {
            return p.clone();
        }
        let scaled = |p: Polynomial, s: Option<&Coeff>| match s {
            None => p,
            Some(s) => p.scale(s),
        };
        let p = match &**f {
            Node::Input { form, constant } => {
                &form.to_polynomial() + &Polynomial::constant(constant.clone())
            }
            Node::Alpha => Polynomial::constant(Coeff::alpha(1)),
            Node::Z => Polynomial::var(Var::z()),
            Node::Add(a, b, s) => {
                let x = scaled(go(a, memo), s.as_ref().map(|s| &s[0]));
                let y = scaled(go(b, memo), s.as_ref().map(|s| &s[1]));
                &x + &y
            }
            Node::Mul2(a, b, s) => {
                let x = scaled(go(a, memo), s.as_ref().map(|s| &s[0]));
                let y = scaled(go(b, memo), s.as_ref().map(|s| &s[1]));
                &x * &y
            }
            Node::Mul3(a, b, c) => &(&go(a, memo) * &go(b, memo)) * &go(c, memo),
            Node::NegCube(a, s) => {
                let cube = go(a, memo).pow(3);
                let s = s.clone().unwrap_or_else(Coeff::one);
                cube.scale(&-&s)
            }
        };
        memo.insert(key(f), p.clone());
        p
    }
    go(f, &mut HashMap::new())
}

/// `eval` on an optional formula, with `None` as zero.
pub fn eval_opt(f: &Option<Formula>) -> Polynomial {
    f.as_ref().map(eval).unwrap_or_else(Polynomial::zero)
}

/// Lower to the gate IR. Formula shape unfolds shared subtrees; circuit shape shares them.
pub fn to_circuit(f: &Formula, shape: Shape, basis: Basis) -> Result<Circuit, CircuitError> {
    let mut b = Builder::new();
    let mut memo: HashMap<usize, usize> = HashMap::new();
    let out = emit(f, &mut b, &mut memo, shape == Shape::Circuit);
    b.finish(out, shape, basis)
}

/// Optional formula to circuit; `None` becomes the zero circuit.
pub fn to_circuit_opt(
    f: &Option<Formula>,
    shape: Shape,
    basis: Basis,
) -> Result<Circuit, CircuitError> {
    match f {
        Some(f) => to_circuit(f, shape, basis),
        None => Ok(Circuit::zero(shape, basis)),
    }
}

/// Append `f` to a builder, returning its gate id.
pub fn emit(f: &Formula, b: &mut Builder, memo: &mut HashMap<usize, usize>, share: bool) -> usize {
    if share {
        if let Some(&g) = memo.get(&key(f)) {
            return g;
        }
    }
    let g = match &**f {
        Node::Input { form, constant } => b.push(Gate::Input {
            form: form.clone(),
            constant: constant.clone(),
        }),
        Node::Alpha => b.push(Gate::Alpha),
        Node::Z => b.push(Gate::Z),
        Node::Add(x, y, s) => {
            let (i, j) = (emit(x, b, memo, share), emit(y, b, memo, share));
            b.push(Gate::Add { children: [i, j], scalars: s.clone() })
        }
        Node::Mul2(x, y, s) => {
            let (i, j) = (emit(x, b, memo, share), emit(y, b, memo, share));
            b.push(Gate::Mul2 { children: [i, j], scalars: s.clone() })
        }
        Node::Mul3(x, y, z) => {
            let i = emit(x, b, memo, share);
            let j = emit(y, b, memo, share);
            let k = emit(z, b, memo, share);
            b.mul3(i, j, k)
        }
        Node::NegCube(x, s) => {
            let i = emit(x, b, memo, share);
            b.negcube(i, s.clone())
        }
    };
    if share {
        memo.insert(key(f), g);
    }
    g
}

/// Rebuild with every leaf passed through `f`; `None` from `f` zeroes that leaf.
pub fn map_leaves(
    root: &Formula,
    f: &dyn Fn(&Node) -> Option<Formula>,
) -> Option<Formula> {
    fn go(
        n: &Formula,
        f: &dyn Fn(&Node) -> Option<Formula>,
        memo: &mut HashMap<usize, Option<Formula>>,
    ) -> Option<Formula> {
        if let Some(r) = memo.get(&key(n)) {
            return r.clone();
        }
        let r = match &**n {
            Node::Input { .. } | Node::Alpha | Node::Z => f(n),
            Node::Add(a, b, s) => match (go(a, f, memo), go(b, f, memo)) {
                (Some(x), Some(y)) => Some(Arc::new(Node::Add(x, y, s.clone()))),
                (Some(x), None) => Some(scale_edge(x, s.as_ref().map(|s| &s[0]))),
                (None, Some(y)) => Some(scale_edge(y, s.as_ref().map(|s| &s[1]))),
                (None, None) => None,
            },
            Node::Mul2(a, b, s) => {
                let (x, y) = (go(a, f, memo)?, go(b, f, memo)?);
                Some(Arc::new(Node::Mul2(x, y, s.clone())))
            }
            Node::Mul3(a, b, c) => {
                let (x, y, z) = (go(a, f, memo)?, go(b, f, memo)?, go(c, f, memo)?);
                Some(mul3(x, y, z))
            }
            Node::NegCube(a, s) => Some(negcube(go(a, f, memo)?, s.clone())),
        };
        memo.insert(key(n), r.clone());
        r
    }
    go(root, f, &mut HashMap::new())
}

/// Scale the linear part of every leaf by `c`, keeping constants; a degree-`e`
/// component of the result picks up `c^e`.
pub fn scale_leaves(root: &Formula, c: &Coeff) -> Option<Formula> {
    map_leaves(root, &|n| match n {
        Node::Input { form, constant } => {
            let form = form.scale(c);
            if form.is_zero() && constant.is_zero() {
                None
            } else {
                Some(input(form, constant.clone()))
            }
        }
        Node::Alpha => Some(Arc::new(Node::Alpha)),
        Node::Z => Some(Arc::new(Node::Z)),
        _ => unreachable!("map_leaves only visits leaves"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(i: u64) -> Formula {
        var(Var::x(i))
    }

    #[test]
    fn size_counts_unfolding() {
        let a = add(x(1), x(2));
        let m = mul(a.clone(), a);
        assert_eq!(size(&m), 7);
        assert_eq!(depth(&m), 2);
        let c = to_circuit(&m, Shape::Formula, Basis::Arity2).unwrap();
        assert_eq!(c.size(), 7);
        let c = to_circuit(&m, Shape::Circuit, Basis::Arity2).unwrap();
        assert_eq!(c.size(), 4);
        assert_eq!(c.eval(), eval(&m));
    }

    #[test]
    fn zero_propagation() {
        let z = zero_leaf();
        let f = add(mul(z.clone(), x(1)), x(2));
        assert_eq!(nonzero(&f).map(|f| eval(&f)), Some(Polynomial::x(2)));
        assert!(nonzero(&mul3(x(1), x(2), z)).is_none());
        assert!(sum(vec![None, None]).is_none());
        let s = sum((1..=5).map(|i| Some(x(i))).collect()).unwrap();
        assert_eq!(depth(&s), 3);
    }

    #[test]
    fn leaf_scaling_weights_by_degree() {
        let f = add(mul(x(1), x(2)), input(LinearForm::var(Var::x(3)), Coeff::int(4)));
        let g = scale_leaves(&f, &Coeff::int(2)).unwrap();
        assert_eq!(eval(&g), Polynomial::parse("4*x1*x2 + 2*x3 + 4").unwrap());
    }

    #[test]
    fn monomial_formula() {
        let p = Polynomial::parse("3*x1^2*x2 - x3 + 5").unwrap();
        let f = from_polynomial(&p).unwrap();
        assert_eq!(eval(&f), p);
        let c = to_circuit(&f, Shape::Formula, Basis::Arity2).unwrap();
        assert!(c.validate(super::super::Predicate::FormulaTree).is_ok());
        assert!(from_polynomial(&Polynomial::zero()).is_none());
    }
}
