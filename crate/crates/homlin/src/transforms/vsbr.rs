//! Depth reduction for homogeneous arity-3 IHL circuits.
//!
//! For gates `u`, `v` the gadget `[u:v]` is linear in a placeholder `z`:
//! `[u:u] = z`, sums add, and a product passes through its leftmost child of
//! maximal degree. With the m-frontier `F_m` (products of degree above `m`
//! whose children all have degree at most `m`):
//!
//! * `u = sum_{w in F_m} [u:w](z := w)` when `deg u > m`;
//! * `[u:v] = sum_{w in F_m} [u:w](z := [w:v])` when `deg v <= m < deg u`.
//!
//! Both sums have factors of degree at most about two thirds of the original,
//! which gives depth `O(log s * log d)`.

use std::collections::{BTreeMap, HashMap};

use crate::circuit::{Basis, Builder, Circuit, Gate, Predicate, Shape};
use crate::poly::{Coeff, LinearForm, Polynomial, Var};

use super::{precondition, require, TransformError};

#[derive(Clone, Debug)]
pub struct VsbrOutput {
    pub circuit: Circuit,
    pub size: usize,
    pub depth: usize,
    /// `depth / (log2 s * max(log2 d, 1))` for the input size `s` and degree `d`.
    pub constant: f64,
}

/// Gates of the m-frontier.
pub fn frontier(c: &Circuit, deg: &[u32], m: u32) -> Vec<usize> {
    c.gates
        .iter()
        .enumerate()
        .filter(|(i, g)| match g {
            Gate::Mul3 { children } => deg[*i] > m && children.iter().all(|&k| deg[k] <= m),
            _ => false,
        })
        .map(|(i, _)| i)
        .collect()
}

fn max_child(children: &[usize; 3], deg: &[u32]) -> usize {
    let mut best = 0;
    for k in 1..3 {
        if deg[children[k]] > deg[children[best]] {
            best = k;
        }
    }
    best
}

/// `[u:v]` as a polynomial in `z`.
pub fn colon_poly(c: &Circuit, u: usize, v: usize) -> Polynomial {
    let deg = c.degrees(false).expect("ungraded degrees never fail");
    let vals = c.eval_all();
    let mut memo: HashMap<usize, Polynomial> = HashMap::new();
    fn go(c: &Circuit, u: usize, v: usize, deg: &[u32], vals: &[Polynomial], memo: &mut HashMap<usize, Polynomial>) -> Polynomial {
        if u == v {
            return Polynomial::var(Var::z());
        }
        if let Some(p) = memo.get(&u) {
            return p.clone();
        }
        let p = match &c.gates[u] {
            Gate::Add { children: [a, b], scalars } => {
                let (x, y) = (go(c, *a, v, deg, vals, memo), go(c, *b, v, deg, vals, memo));
                match scalars {
                    None => &x + &y,
                    Some([s, t]) => &x.scale(s) + &y.scale(t),
                }
            }
            Gate::Mul3 { children } => {
                let k = max_child(children, deg);
                let mut p = go(c, children[k], v, deg, vals, memo);
                for (j, &ch) in children.iter().enumerate() {
                    if j != k {
                        p = &p * &vals[ch];
                    }
                }
                p
            }
            _ => Polynomial::zero(),
        };
        memo.insert(u, p.clone());
        p
    }
    go(c, u, v, &deg, &vals, &mut memo)
}

fn subst_z(p: &Polynomial, by: &Polynomial) -> Polynomial {
    p.substitute(&BTreeMap::from([(Var::z(), by.clone())]))
}

/// `u = sum_{w in F_m} [u:w](z := w)`.
pub fn usum_holds(c: &Circuit, u: usize, m: u32) -> bool {
    let deg = c.degrees(false).expect("ungraded degrees never fail");
    let vals = c.eval_all();
    let mut acc = Polynomial::zero();
    for w in frontier(c, &deg, m) {
        acc += &subst_z(&colon_poly(c, u, w), &vals[w]);
    }
    acc == vals[u]
}

/// `[u:v] = sum_{w in F_m} [u:w](z := [w:v])`.
pub fn uvsum_holds(c: &Circuit, u: usize, v: usize, m: u32) -> bool {
    let deg = c.degrees(false).expect("ungraded degrees never fail");
    let mut acc = Polynomial::zero();
    for w in frontier(c, &deg, m) {
        acc += &subst_z(&colon_poly(c, u, w), &colon_poly(c, w, v));
    }
    acc == colon_poly(c, u, v)
}

struct Vsbr<'a> {
    c: &'a Circuit,
    deg: Vec<u32>,
    vals: Vec<Polynomial>,
    below: Vec<Vec<bool>>,
    frontiers: HashMap<u32, Vec<usize>>,
    b: Builder,
    u_memo: HashMap<usize, usize>,
    uv_memo: HashMap<(usize, usize, usize), Option<usize>>,
    paths: HashMap<(usize, usize), Coeff>,
}

impl Vsbr<'_> {
    fn frontier(&mut self, m: u32) -> Vec<usize> {
        if let Some(f) = self.frontiers.get(&m) {
            return f.clone();
        }
        let f = frontier(self.c, &self.deg, m);
        self.frontiers.insert(m, f.clone());
        f
    }

    /// Children of a frontier product: (leftmost max, smaller other, larger other).
    fn split(&self, w: usize) -> (usize, usize, usize) {
        let Gate::Mul3 { children } = &self.c.gates[w] else { unreachable!("frontier gates are products") };
        let k = max_child(children, &self.deg);
        let rest: Vec<usize> = (0..3).filter(|&j| j != k).map(|j| children[j]).collect();
        if self.deg[rest[1]] < self.deg[rest[0]] {
            (children[k], rest[1], rest[0])
        } else {
            (children[k], rest[0], rest[1])
        }
    }

    fn u(&mut self, u: usize) -> usize {
        if let Some(&g) = self.u_memo.get(&u) {
            return g;
        }
        let d = self.deg[u];
        let g = if d == 1 {
            let (form, _) = LinearForm::split_affine(&self.vals[u]).expect("degree-1 gates are linear");
            self.b.leaf(form)
        } else {
            let m = (2 * d).div_ceil(3);
            let mut terms = Vec::new();
            for w in self.frontier(m) {
                if !self.below[u][w] {
                    continue;
                }
                // The smallest factor takes the place of w inside [u:w].
                let (w1, small, other) = self.split(w);
                let cz = self.u(small);
                if let Some(a) = self.uv(u, w, cz) {
                    let (p, q) = (self.u(w1), self.u(other));
                    terms.push(self.b.mul3(a, p, q));
                }
            }
            match self.b.balanced_sum(terms) {
                Some(g) => g,
                None => self.b.leaf(LinearForm::zero()),
            }
        };
        self.u_memo.insert(u, g);
        g
    }

    /// Weighted count of sum-only paths from `u` down to `v` at equal degree.
    fn path_weight(&mut self, u: usize, v: usize) -> Coeff {
        if u == v {
            return Coeff::one();
        }
        if let Some(w) = self.paths.get(&(u, v)) {
            return w.clone();
        }
        let w = match self.c.gates[u].clone() {
            Gate::Add { children: [a, b], scalars } => {
                let (x, y) = (self.path_weight(a, v), self.path_weight(b, v));
                match scalars {
                    None => &x + &y,
                    Some([s, t]) => &(&x * &s) + &(&y * &t),
                }
            }
            _ => Coeff::zero(),
        };
        self.paths.insert((u, v), w.clone());
        w
    }

    /// Gate computing `[u:v](z := cz)`, or `None` when it vanishes.
    fn uv(&mut self, u: usize, v: usize, cz: usize) -> Option<usize> {
        if u == v {
            return Some(cz);
        }
        if !self.below[u][v] || self.deg[u] < self.deg[v] {
            return None;
        }
        if let Some(r) = self.uv_memo.get(&(u, v, cz)) {
            return *r;
        }
        let gap = self.deg[u] - self.deg[v];
        let r = if gap == 0 {
            let n = self.path_weight(u, v);
            if n.is_zero() {
                None
            } else if n.is_one() {
                Some(cz)
            } else {
                let h = n.scale(&crate::poly::q(1, 2));
                Some(self.b.add_scaled(cz, cz, h.clone(), h))
            }
        } else {
            let m = self.deg[v] + gap.div_ceil(2);
            let mut terms = Vec::new();
            for w in self.frontier(m) {
                if !self.below[u][w] || !self.below[w][v] {
                    continue;
                }
                let (w1, small, other) = self.split(w);
                let Some(inner) = self.uv(w1, v, cz) else { continue };
                let cs = self.u(small);
                let Some(outer) = self.uv(u, w, cs) else { continue };
                let o = self.u(other);
                terms.push(self.b.mul3(outer, inner, o));
            }
            self.b.balanced_sum(terms)
        };
        self.uv_memo.insert((u, v, cz), r);
        r
    }
}

pub fn vsbr3(c: &Circuit) -> Result<VsbrOutput, TransformError> {
    require(c, Predicate::Ihl, "vsbr3")?;
    require(c, Predicate::Arity3, "vsbr3")?;
    if c.gates.iter().any(|g| matches!(g, Gate::Alpha | Gate::Z)) {
        return precondition("vsbr3", "alpha and z leaves are not allowed");
    }
    let c = &c.pruned();
    let deg = c.degrees(true)?;
    let n = c.size();
    let mut below: Vec<Vec<bool>> = Vec::with_capacity(n);
    for i in 0..n {
        let mut row = vec![false; n];
        row[i] = true;
        for ch in c.gates[i].children() {
            for (j, &flag) in below[ch].iter().enumerate() {
                row[j] |= flag;
            }
        }
        below.push(row);
    }
    let mut st = Vsbr {
        c,
        vals: c.eval_all(),
        deg: deg.clone(),
        below,
        frontiers: HashMap::new(),
        b: Builder::new(),
        u_memo: HashMap::new(),
        uv_memo: HashMap::new(),
        paths: HashMap::new(),
    };
    let out = st.u(c.output);
    let circuit = st.b.finish(out, Shape::Circuit, Basis::Arity3)?.pruned();
    let depth = circuit.depth();
    let d = deg[c.output].max(2) as f64;
    let s = n.max(2) as f64;
    Ok(VsbrOutput {
        size: circuit.size(),
        depth,
        constant: depth as f64 / (s.log2() * d.log2().max(1.0)),
        circuit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn five() -> Circuit {
        Circuit::parse(
            "basis arity3\ngate a = input x1\ngate b = input x2\ngate c = input x3\ngate d = input x4\ngate e = input x5\n\
             gate p = mul3 a b c\ngate q = mul3 p d e\noutput q",
        )
        .unwrap()
    }

    #[test]
    fn five_fold_product() {
        let c = five();
        let out = vsbr3(&c).unwrap();
        assert_eq!(out.circuit.eval(), Polynomial::parse("x1*x2*x3*x4*x5").unwrap());
        assert!(out.circuit.validate(Predicate::Arity3).is_ok());
        assert!(out.circuit.validate(Predicate::Ihl).is_ok());
    }

    #[test]
    fn colon_basics() {
        let c = five();
        assert_eq!(colon_poly(&c, 6, 6), Polynomial::var(Var::z()));
        // x1 is not under x2.
        assert!(colon_poly(&c, 1, 0).is_zero());
        assert_eq!(colon_poly(&c, 6, 5), Polynomial::parse("x4*x5*z").unwrap());
        for m in 1..5 {
            assert!(usum_holds(&c, 6, m), "m = {}", m);
        }
        assert!(uvsum_holds(&c, 6, 0, 3));
    }

    #[test]
    fn shared_sums() {
        let c = Circuit::parse(
            "basis arity3\ngate a = input x1\ngate b = input x2\ngate s = add a b\ngate t = add s s\n\
             gate p = mul3 t s a\ngate r = add p p\ngate q = mul3 r t b\noutput q",
        )
        .unwrap();
        let out = vsbr3(&c).unwrap();
        assert_eq!(out.circuit.eval(), c.eval());
    }
}
