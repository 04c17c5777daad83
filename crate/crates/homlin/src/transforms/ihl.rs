//! Input-homogenization: compute `f - f(0)` with homogeneous linear leaves only.

use std::collections::HashMap;
use std::sync::Arc;

use crate::circuit::tree::{self, add_opt, leaf, mul_opt, Formula, Node};
use crate::circuit::{Basis, Builder, Circuit, Gate, Shape};
use crate::poly::Coeff;

use super::brent::brent_tree;
use super::rescale::rescale_tree;
use super::{require_formula, require_no, TransformError};

type Split = (Option<Formula>, Coeff);

/// Pairs `(f - f(0), f(0))` for every node of an arity-2 formula.
pub fn ihl_tree(f: &Formula) -> Result<Split, TransformError> {
    fn scaled(p: Split, s: Option<&Coeff>) -> Result<Split, TransformError> {
        match s {
            None => Ok(p),
            Some(s) => Ok((match &p.0 {
                Some(h) => rescale_tree(h, s)?,
                None => None,
            }, &p.1 * s)),
        }
    }
    fn go(f: &Formula, memo: &mut HashMap<usize, Split>) -> Result<Split, TransformError> {
        let k = Arc::as_ptr(f) as usize;
        if let Some(r) = memo.get(&k) {
            return Ok(r.clone());
        }
        let r = match &**f {
            Node::Input { form, constant } => {
                ((!form.is_zero()).then(|| leaf(form.clone())), constant.clone())
            }
            Node::Alpha => (None, Coeff::alpha(1)),
            Node::Z => (Some(f.clone()), Coeff::zero()),
            Node::Add(a, b, s) => {
                let (ha, ca) = scaled(go(a, memo)?, s.as_ref().map(|s| &s[0]))?;
                let (hb, cb) = scaled(go(b, memo)?, s.as_ref().map(|s| &s[1]))?;
                (add_opt(ha, hb), &ca + &cb)
            }
            Node::Mul2(a, b, s) => {
                let (ha, ca) = scaled(go(a, memo)?, s.as_ref().map(|s| &s[0]))?;
                let (hb, cb) = scaled(go(b, memo)?, s.as_ref().map(|s| &s[1]))?;
                let prod = mul_opt(ha.clone(), hb.clone());
                let rb = match &hb {
                    Some(h) => rescale_tree(h, &ca)?,
                    None => None,
                };
                let ra = match &ha {
                    Some(h) => rescale_tree(h, &cb)?,
                    None => None,
                };
                (add_opt(add_opt(prod, rb), ra), &ca * &cb)
            }
            Node::Mul3(..) | Node::NegCube(..) => {
                return super::precondition("ihl-formula", "input must be over the arity-2 basis")
            }
        };
        memo.insert(k, r.clone());
        Ok(r)
    }
    go(f, &mut HashMap::new())
}

/// Brent first, then the pairwise construction on the balanced formula.
pub fn ihl_formula(c: &Circuit) -> Result<Circuit, TransformError> {
    require_formula(c, "ihl-formula")?;
    require_no(c, "ihl-formula", |g| matches!(g, Gate::Mul3 { .. } | Gate::NegCube { .. }), "outside the arity-2 basis")?;
    let (h, _) = ihl_tree(&brent_tree(&c.to_tree()))?;
    Ok(tree::to_circuit_opt(&h, Shape::Formula, Basis::Arity2)?)
}

/// Pending value `constant + scale * gate`.
#[derive(Clone)]
struct Lazy {
    c: Coeff,
    h: Option<(usize, Coeff)>,
}

/// Circuit version: every gate becomes at most three gates and constants live
/// on edge scalars, so the output has size at most `3s` and depth at most `3s`.
pub fn ihl_circuit(c: &Circuit) -> Result<Circuit, TransformError> {
    require_no(c, "ihl-circuit", |g| matches!(g, Gate::Mul3 { .. } | Gate::NegCube { .. }), "outside the arity-2 basis")?;
    let mut b = Builder::new();
    let mut vals: Vec<Lazy> = Vec::with_capacity(c.size());
    let reach = c.reachable();
    let scale_pair = |v: &Lazy, s: Option<&Coeff>| -> Lazy {
        match s {
            None => v.clone(),
            Some(s) => Lazy {
                c: &v.c * s,
                h: v.h.as_ref().map(|(g, t)| (*g, t * s)).filter(|(_, t)| !t.is_zero()),
            },
        }
    };
    // Sum of scaled gates; a single term stays lazy.
    let combine = |b: &mut Builder, terms: Vec<(usize, Coeff)>| -> Option<(usize, Coeff)> {
        let mut it = terms.into_iter().filter(|(_, t)| !t.is_zero());
        let mut acc = it.next()?;
        for (g, t) in it {
            let id = b.add_scaled(acc.0, g, acc.1.clone(), t);
            acc = (id, Coeff::one());
        }
        Some(acc)
    };
    for (i, g) in c.gates.iter().enumerate() {
        if !reach[i] {
            vals.push(Lazy { c: Coeff::zero(), h: None });
            continue;
        }
        let v = match g {
            Gate::Input { form, constant } => Lazy {
                c: constant.clone(),
                h: (!form.is_zero()).then(|| (b.leaf(form.clone()), Coeff::one())),
            },
            Gate::Alpha => Lazy { c: Coeff::alpha(1), h: None },
            Gate::Z => Lazy { c: Coeff::zero(), h: Some((b.push(Gate::Z), Coeff::one())) },
            Gate::Add { children: [x, y], scalars } => {
                let p = scale_pair(&vals[*x], scalars.as_ref().map(|s| &s[0]));
                let q = scale_pair(&vals[*y], scalars.as_ref().map(|s| &s[1]));
                let terms: Vec<(usize, Coeff)> = p.h.into_iter().chain(q.h).collect();
                Lazy { c: &p.c + &q.c, h: combine(&mut b, terms) }
            }
            Gate::Mul2 { children: [x, y], scalars } => {
                let p = scale_pair(&vals[*x], scalars.as_ref().map(|s| &s[0]));
                let q = scale_pair(&vals[*y], scalars.as_ref().map(|s| &s[1]));
                let mut terms = Vec::new();
                if let (Some((ga, sa)), Some((gb, sb))) = (&p.h, &q.h) {
                    terms.push((b.mul(*ga, *gb), sa * sb));
                }
                if let Some((gb, sb)) = &q.h {
                    terms.push((*gb, &p.c * sb));
                }
                if let Some((ga, sa)) = &p.h {
                    terms.push((*ga, &q.c * sa));
                }
                Lazy { c: &p.c * &q.c, h: combine(&mut b, terms) }
            }
            Gate::Mul3 { .. } | Gate::NegCube { .. } => unreachable!("rejected above"),
        };
        vals.push(v);
    }
    let out = match vals[c.output].h.clone() {
        None => return Ok(Circuit::zero(Shape::Circuit, Basis::Arity2)),
        Some((g, s)) if s.is_one() => g,
        Some((g, s)) => {
            let scaled = match b.gates[g].clone() {
                Gate::Input { form, constant } => Gate::Input { form: form.scale(&s), constant: &constant * &s },
                Gate::Add { children, scalars } => Gate::Add {
                    children,
                    scalars: Some(edge_times(scalars, &s, true)),
                },
                Gate::Mul2 { children, scalars } => Gate::Mul2 {
                    children,
                    scalars: Some(edge_times(scalars, &s, false)),
                },
                Gate::Z => Gate::Add { children: [g, g], scalars: Some([s.clone(), Coeff::zero()]) },
                other => unreachable!("unexpected gate {:?}", other),
            };
            b.push(scaled)
        }
    };
    let circ = b.finish(out, Shape::Circuit, Basis::Arity2)?;
    Ok(circ.pruned())
}

fn edge_times(scalars: Option<[Coeff; 2]>, s: &Coeff, both: bool) -> [Coeff; 2] {
    let [a, b] = scalars.unwrap_or_else(|| [Coeff::one(), Coeff::one()]);
    if both {
        [&a * s, &b * s]
    } else {
        [&a * s, b]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::Polynomial;

    fn p(s: &str) -> Polynomial {
        Polynomial::parse(s).unwrap()
    }

    #[test]
    fn formula_examples() {
        let c = Circuit::parse("shape formula\ngate a = input x1\ngate b = input x2\ngate m = mul a b\ngate k = input 3\ngate s = add m k\noutput s").unwrap();
        assert_eq!(ihl_formula(&c).unwrap().eval(), p("x1*x2"));
        let c = Circuit::parse("shape formula\ngate a = input x1 + 1\ngate b = input x2 + 2\ngate m = mul a b\noutput m").unwrap();
        let out = ihl_formula(&c).unwrap();
        assert_eq!(out.eval(), p("x1*x2 + 2*x1 + x2"));
        assert!(out.validate(crate::circuit::Predicate::Ihl).is_ok());
        let c = Circuit::parse("shape formula\ngate a = input 5\noutput a").unwrap();
        assert!(ihl_formula(&c).unwrap().eval().is_zero());
    }

    #[test]
    fn circuit_examples() {
        let c = Circuit::parse("gate a = input 2*x1 + 7\noutput a").unwrap();
        assert_eq!(ihl_circuit(&c).unwrap().eval(), p("2*x1"));
        let c = Circuit::parse("gate a = input x1 + 1\ngate m = mul a a\noutput m").unwrap();
        let out = ihl_circuit(&c).unwrap();
        assert_eq!(out.eval(), p("x1^2 + 2*x1"));
        assert!(out.size() <= 12 && out.depth() <= 6);
        assert!(out.validate(crate::circuit::Predicate::Ihl).is_ok());
    }

    #[test]
    fn scaled_root_is_materialized() {
        let c = Circuit::parse("gate a = input x1 + 1\ngate k = input 3\ngate m = mul a k\noutput m").unwrap();
        let out = ihl_circuit(&c).unwrap();
        assert_eq!(out.eval(), p("3*x1"));
        assert_eq!(out.size(), 1);
    }
}
