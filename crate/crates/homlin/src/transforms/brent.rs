//! Depth reduction for arity-2 formulas.

use std::sync::Arc;

use crate::circuit::tree::{self, add_opt, mul, Formula, Node};
use crate::circuit::{Basis, Circuit, Gate};

use super::{lift, require_formula, require_no, TransformError};

/// Walk from the root into the larger child (first child on ties) until the
/// subtree has at most `2s/3` nodes. Returns the path as (node, child index).
pub(super) fn separator(f: &Formula) -> (Vec<(Formula, usize)>, Formula) {
    let s = tree::size(f);
    let mut path = Vec::new();
    let mut cur = f.clone();
    let mut cur_size = s;
    while 3 * cur_size > 2 * s {
        let ch = cur.children();
        let mut best = 0;
        let mut best_size = 0;
        for (i, c) in ch.iter().enumerate() {
            let cs = tree::size(c);
            if cs > best_size {
                best = i;
                best_size = cs;
            }
        }
        let next = ch[best].clone();
        path.push((cur, best));
        cur = next;
        cur_size = best_size;
    }
    (path, cur)
}

/// Rebuild the root with the end of `path` replaced by `sub`, zero-propagating.
pub(super) fn replace_on_path(path: &[(Formula, usize)], sub: Option<Formula>) -> Option<Formula> {
    let mut cur = sub;
    for (node, idx) in path.iter().rev() {
        let ch: Vec<Formula> = node.children().into_iter().cloned().collect();
        cur = match &**node {
            Node::Add(_, _, s) => match cur {
                Some(c) => {
                    let (a, b) = if *idx == 0 { (c, ch[1].clone()) } else { (ch[0].clone(), c) };
                    Some(Arc::new(Node::Add(a, b, s.clone())))
                }
                None => {
                    let other = ch[1 - idx].clone();
                    match s {
                        Some(sc) if !sc[1 - idx].is_one() => Some(Arc::new(Node::Add(
                            other,
                            tree::zero_leaf(),
                            Some([sc[1 - idx].clone(), crate::poly::Coeff::zero()]),
                        ))),
                        _ => Some(other),
                    }
                }
            },
            Node::Mul2(_, _, s) => cur.map(|c| {
                let (a, b) = if *idx == 0 { (c, ch[1].clone()) } else { (ch[0].clone(), c) };
                Arc::new(Node::Mul2(a, b, s.clone()))
            }),
            Node::Mul3(..) => cur.map(|c| {
                let mut k = ch.clone();
                k[*idx] = c;
                tree::mul3(k[0].clone(), k[1].clone(), k[2].clone())
            }),
            Node::NegCube(_, s) => cur.map(|c| tree::negcube(c, s.clone())),
            _ => unreachable!("leaves are never on a separator path"),
        };
    }
    cur
}

fn balanced_product(mut items: Vec<Formula>) -> Formula {
    while items.len() > 1 {
        let mut next = Vec::with_capacity(items.len().div_ceil(2));
        let mut it = items.into_iter();
        while let Some(a) = it.next() {
            next.push(match it.next() {
                Some(b) => mul(a, b),
                None => a,
            });
        }
        items = next;
    }
    items.pop().expect("nonempty product")
}

/// `F = A*v + F[v<-0]`, where `A` is the product of the product-siblings on the
/// path to the separator `v`. Formulas of size at most 3 are returned as is.
pub fn brent_tree(f: &Formula) -> Formula {
    if tree::size(f) <= 3 {
        return f.clone();
    }
    let (path, v) = separator(f);
    let sibs: Vec<Formula> = path
        .iter()
        .filter_map(|(node, idx)| match &**node {
            Node::Mul2(a, b, _) => Some(if *idx == 0 { b.clone() } else { a.clone() }),
            _ => None,
        })
        .collect();
    let rest = replace_on_path(&path, None).map(|b| brent_tree(&b));
    let vb = brent_tree(&v);
    let top = if sibs.is_empty() {
        vb
    } else {
        mul(brent_tree(&balanced_product(sibs)), vb)
    };
    add_opt(Some(top), rest).expect("top term is present")
}

pub fn brent(c: &Circuit) -> Result<Circuit, TransformError> {
    require_formula(c, "brent")?;
    require_no(c, "brent", |g| matches!(g, Gate::Mul3 { .. } | Gate::NegCube { .. }), "outside the arity-2 basis")?;
    lift(c, Basis::Arity2, |f| Ok(Some(brent_tree(f))))
}
