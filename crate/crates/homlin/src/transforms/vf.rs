//! Formulas to graded arity-3 representations.
//!
//! `f = f(0) + sum_{d odd} f_d + sum_{d even} (1/d) sum_i x_i * df_d/dx_i`, with
//! each odd-degree piece held as an arity-3 IHL circuit. Products are removed
//! by threading a placeholder `z` through even subformulas.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use num_traits::{One, Zero};

use crate::circuit::tree::{self, Formula, Node};
use crate::circuit::{Basis, Builder, Circuit, Gate, Predicate, Shape};
use crate::poly::{qi, Coeff, Polynomial, Scalar, Var};

use super::brent::brent_tree;
use super::derivative::derivative_tree;
use super::ihl::ihl_tree;
use super::parity::{node_parity, parity_tree};
use super::rescale::rescale_tree;
use super::{require_formula, require_no, TransformError};

#[derive(Clone, Debug, PartialEq)]
pub struct GradedArity3Repr {
    pub constant_part: Coeff,
    pub odd_parts: BTreeMap<u32, Circuit>,
    /// Degree -> variable -> circuit for the partial derivative.
    pub even_parts: BTreeMap<u32, BTreeMap<Var, Circuit>>,
}

impl GradedArity3Repr {
    pub fn reassemble(&self) -> Polynomial {
        let mut f = Polynomial::constant(self.constant_part.clone());
        for c in self.odd_parts.values() {
            f += &c.eval();
        }
        for (&d, parts) in &self.even_parts {
            let inv = Coeff::rational(1, i64::from(d));
            for (&v, c) in parts {
                f += &(&Polynomial::var(v) * &c.eval()).scale(&inv);
            }
        }
        f
    }

    /// Every stored circuit is IHL, arity-3, and homogeneous of the right degree.
    pub fn validate(&self) -> Result<(), String> {
        let check = |c: &Circuit, d: u32, what: String| -> Result<(), String> {
            c.validate(Predicate::Ihl).map_err(|v| format!("{}: {}", what, v))?;
            c.validate(Predicate::Arity3).map_err(|v| format!("{}: {}", what, v))?;
            let p = c.eval();
            if !p.is_zero() && (!p.is_homogeneous() || p.degree() != Some(d)) {
                return Err(format!("{}: not homogeneous of degree {}", what, d));
            }
            Ok(())
        };
        for (&d, c) in &self.odd_parts {
            if d % 2 == 0 {
                return Err(format!("odd part stored under even degree {}", d));
            }
            check(c, d, format!("odd part {}", d))?;
        }
        for (&d, parts) in &self.even_parts {
            if d % 2 == 1 {
                return Err(format!("even part stored under odd degree {}", d));
            }
            for (v, c) in parts {
                check(c, d - 1, format!("even part {} d/d{}", d, v))?;
            }
        }
        Ok(())
    }

    fn circuits(&self) -> impl Iterator<Item = &Circuit> {
        self.odd_parts.values().chain(self.even_parts.values().flat_map(|m| m.values()))
    }

    /// Total size and maximal depth over the stored circuits.
    pub fn measure(&self) -> super::Measure {
        super::Measure {
            size: self.circuits().map(Circuit::size).sum(),
            depth: self.circuits().map(Circuit::depth).max().unwrap_or(0),
        }
    }

    pub fn summary(&self) -> Vec<String> {
        let mut out = vec![format!("constant {}", self.constant_part.to_compact())];
        for (d, c) in &self.odd_parts {
            out.push(format!("odd {}: size {}, depth {}", d, c.size(), c.depth()));
        }
        for (d, parts) in &self.even_parts {
            let total: usize = parts.values().map(|c| c.size()).sum();
            out.push(format!("even {}: {} derivatives, total size {}", d, parts.len(), total));
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("constant {}\n", self.constant_part.to_compact());
        for (d, c) in &self.odd_parts {
            s.push_str(&format!("part odd {}\n{}end\n", d, c.to_text()));
        }
        for (d, parts) in &self.even_parts {
            for (v, c) in parts {
                s.push_str(&format!("part even {} {}\n{}end\n", d, v, c.to_text()));
            }
        }
        s
    }
}

/// Inverse of the Vandermonde matrix `V[l][e] = (l+1)^(e+1)`, `l, e < n`.
fn vandermonde_inverse(n: usize) -> Vec<Vec<Scalar>> {
    let mut a: Vec<Vec<Scalar>> = (0..n)
        .map(|l| {
            let mut row: Vec<Scalar> = (0..n).map(|e| pow(&qi(l as i64 + 1), e as u32 + 1)).collect();
            row.extend((0..n).map(|j| if j == l { Scalar::one() } else { Scalar::zero() }));
            row
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).find(|&r| !a[r][col].is_zero()).expect("Vandermonde matrix is invertible");
        a.swap(col, piv);
        let inv = Scalar::one() / &a[col][col];
        for x in a[col].iter_mut() {
            *x = &*x * &inv;
        }
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for j in 0..2 * n {
                    let t = &a[col][j] * &f;
                    a[r][j] = &a[r][j] - &t;
                }
            }
        }
    }
    a.into_iter().map(|row| row[n..].to_vec()).collect()
}

fn pow(x: &Scalar, e: u32) -> Scalar {
    (0..e).fold(Scalar::one(), |acc, _| acc * x)
}

/// Homogeneous components of an IHL formula by interpolation over leaf scalings:
/// `h(l*x) = sum_e l^e h_e` for `l = 1..D`. Returns formulas for the requested degrees.
pub fn extract_components(h: &Formula, degrees: &[u32]) -> Result<BTreeMap<u32, Formula>, TransformError> {
    let dmax = tree::degree(h) as usize;
    let mut out = BTreeMap::new();
    if dmax == 0 {
        return Ok(out);
    }
    let winv = vandermonde_inverse(dmax);
    let scaled: Vec<Option<Formula>> = (1..=dmax)
        .map(|l| tree::scale_leaves(h, &Coeff::int(l as i64)))
        .collect();
    for &d in degrees {
        if d == 0 || d as usize > dmax {
            continue;
        }
        let mut terms = Vec::new();
        for (l, f) in scaled.iter().enumerate() {
            let w = &winv[d as usize - 1][l];
            if let (false, Some(f)) = (w.is_zero(), f) {
                terms.push(rescale_tree(f, &Coeff::from_scalar(w.clone()))?);
            }
        }
        if let Some(f) = tree::sum(terms) {
            out.insert(d, f);
        }
    }
    Ok(out)
}

/// Replace products by arity-3 products, carrying the odd factor of an
/// odd-by-even product down the even side as `z`.
fn z_convert(root: &Formula) -> Result<Circuit, TransformError> {
    struct Ctx {
        b: Builder,
        par: HashMap<usize, bool>,
        memo: HashMap<(usize, Option<usize>), usize>,
        z: Option<usize>,
    }
    fn build(v: &Formula, zsrc: Option<usize>, cx: &mut Ctx) -> usize {
        let k = (Arc::as_ptr(v) as usize, zsrc);
        if let Some(&g) = cx.memo.get(&k) {
            return g;
        }
        let odd = node_parity(v, &mut cx.par);
        let g = match &**v {
            Node::Input { form, .. } => {
                debug_assert!(zsrc.is_none());
                cx.b.leaf(form.clone())
            }
            Node::Z => cx.b.push(Gate::Z),
            Node::Add(a, c, s) => {
                let (x, y) = (build(a, zsrc, cx), build(c, zsrc, cx));
                cx.b.push(Gate::Add { children: [x, y], scalars: s.clone() })
            }
            Node::Mul2(a, c, _) => {
                let (pa, pc) = (node_parity(a, &mut cx.par), node_parity(c, &mut cx.par));
                if odd {
                    let (o, e) = if pa { (a, c) } else { (c, a) };
                    let go = build(o, None, cx);
                    build(e, Some(go), cx)
                } else if pa && pc {
                    let zg = match zsrc {
                        Some(z) => z,
                        None => match cx.z {
                            Some(z) => z,
                            None => {
                                let z = cx.b.push(Gate::Z);
                                cx.z = Some(z);
                                z
                            }
                        },
                    };
                    let (x, y) = (build(a, None, cx), build(c, None, cx));
                    cx.b.mul3(zg, x, y)
                } else {
                    let inner = build(a, zsrc, cx);
                    build(c, Some(inner), cx)
                }
            }
            other => unreachable!("unexpected node in a parity-split IHL formula: {:?}", other),
        };
        cx.memo.insert(k, g);
        g
    }
    let mut cx = Ctx { b: Builder::new(), par: HashMap::new(), memo: HashMap::new(), z: None };
    let out = build(root, None, &mut cx);
    Ok(cx.b.finish(out, Shape::Circuit, Basis::Arity3)?.pruned())
}

/// Odd root of the parity split, then z-conversion.
fn odd_piece(f: &Formula) -> Result<Option<Circuit>, TransformError> {
    let (odd, _) = parity_tree(f)?;
    match odd {
        Some(o) => Ok(Some(z_convert(&o)?)),
        None => Ok(None),
    }
}

fn constant_value(f: &Formula) -> Coeff {
    match &**f {
        Node::Input { constant, .. } => constant.clone(),
        Node::Alpha => Coeff::alpha(1),
        Node::Z => Coeff::zero(),
        Node::Add(a, b, s) => match s {
            None => &constant_value(a) + &constant_value(b),
            Some([x, y]) => &(&constant_value(a) * x) + &(&constant_value(b) * y),
        },
        Node::Mul2(a, b, s) => {
            let p = &constant_value(a) * &constant_value(b);
            match s {
                None => p,
                Some([x, y]) => &(&p * x) * y,
            }
        }
        Node::Mul3(a, b, c) => &(&constant_value(a) * &constant_value(b)) * &constant_value(c),
        Node::NegCube(a, s) => {
            let c = constant_value(a).pow(3);
            -&(&c * &s.clone().unwrap_or_else(Coeff::one))
        }
    }
}

pub fn vf_to_v3p(c: &Circuit) -> Result<GradedArity3Repr, TransformError> {
    require_formula(c, "vf-to-v3p")?;
    require_no(c, "vf-to-v3p", |g| matches!(g, Gate::Mul3 { .. } | Gate::NegCube { .. }), "outside the arity-2 basis")?;
    let f = brent_tree(&c.to_tree());
    let constant_part = constant_value(&f);
    let (h, _) = ihl_tree(&f)?;
    let mut repr = GradedArity3Repr {
        constant_part,
        odd_parts: BTreeMap::new(),
        even_parts: BTreeMap::new(),
    };
    let h = match h {
        Some(h) => h,
        None => return Ok(repr),
    };
    let full = tree::eval(&h);
    let degrees = full.degrees();
    let comps = if degrees.len() == 1 {
        BTreeMap::from([(degrees[0], h.clone())])
    } else {
        extract_components(&h, &degrees)?
    };
    for (&d, fd) in &comps {
        if d % 2 == 1 {
            if let Some(circ) = odd_piece(fd)? {
                repr.odd_parts.insert(d, circ);
            }
            continue;
        }
        let target = full.homog_component(d);
        let mut parts = BTreeMap::new();
        for v in target.vars() {
            if target.partial_derivative(v).is_zero() {
                continue;
            }
            let Some(g) = derivative_tree(fd, v) else { continue };
            let (gh, _) = ihl_tree(&brent_tree(&g))?;
            if let Some(gh) = gh {
                if let Some(circ) = odd_piece(&gh)? {
                    parts.insert(v, circ);
                }
            }
        }
        if !parts.is_empty() {
            repr.even_parts.insert(d, parts);
        }
    }
    Ok(repr)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(text: &str) -> (Circuit, GradedArity3Repr) {
        let c = Circuit::parse(&format!("shape formula\n{}", text)).unwrap();
        let r = vf_to_v3p(&c).unwrap();
        (c, r)
    }

    #[test]
    fn product_of_two() {
        let (c, r) = run("gate a = input x1\ngate b = input x2\ngate m = mul a b\noutput m");
        assert_eq!(r.reassemble(), c.eval());
        let parts = &r.even_parts[&2];
        assert_eq!(parts[&Var::x(1)].eval(), Polynomial::x(2));
        assert_eq!(parts[&Var::x(2)].eval(), Polynomial::x(1));
        assert!(r.validate().is_ok());
    }

    #[test]
    fn product_of_three() {
        let (c, r) = run("gate a = input x1\ngate b = input x2\ngate d = input x3\ngate m = mul a b\ngate n = mul m d\noutput n");
        assert_eq!(r.reassemble(), c.eval());
        let odd = &r.odd_parts[&3];
        assert_eq!(odd.eval(), Polynomial::parse("x1*x2*x3").unwrap());
        let products = odd.gates.iter().filter(|g| g.is_product()).count();
        assert_eq!(products, 1);
    }

    #[test]
    fn mixed_degrees_with_constant() {
        let (c, r) = run("gate a = input x1 + 2\ngate b = input x2 - 1\ngate d = input x3\ngate m = mul a b\ngate n = mul m d\ngate k = input x1\ngate s = add n k\noutput s");
        assert_eq!(r.reassemble(), c.eval());
        assert!(r.validate().is_ok());
    }

    #[test]
    fn vandermonde() {
        let inv = vandermonde_inverse(3);
        for l in 0..3 {
            for e in 0..3 {
                let mut acc = Scalar::zero();
                for k in 0..3 {
                    acc += &inv[e][k] * pow(&qi(k as i64 + 1), l as u32 + 1);
                }
                assert_eq!(acc, if e == l { Scalar::one() } else { Scalar::zero() });
            }
        }
    }
}
