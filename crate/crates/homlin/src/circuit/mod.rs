//! Circuit and formula IR.
//!
//! A [`Circuit`] is a topologically ordered gate list; children always have
//! smaller ids than their parents. Formula-oriented passes work on the
//! [`tree::Node`] view instead.

mod text;
pub mod tree;

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::poly::{Coeff, LinearForm, Polynomial, Var};

pub use tree::{Formula, Node};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Shape {
    Formula,
    Circuit,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Basis {
    Arity2,
    Arity3,
    AddNegCube,
}

impl Shape {
    pub fn name(self) -> &'static str {
        match self {
            Shape::Formula => "formula",
            Shape::Circuit => "circuit",
        }
    }
}

impl Basis {
    pub fn name(self) -> &'static str {
        match self {
            Basis::Arity2 => "arity2",
            Basis::Arity3 => "arity3",
            Basis::AddNegCube => "addnegcube",
        }
    }

    pub fn parse(s: &str) -> Option<Basis> {
        match s.to_ascii_lowercase().as_str() {
            "arity2" => Some(Basis::Arity2),
            "arity3" => Some(Basis::Arity3),
            "addnegcube" => Some(Basis::AddNegCube),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Gate {
    /// Affine leaf `form + constant`.
    Input { form: LinearForm, constant: Coeff },
    Add { children: [usize; 2], scalars: Option<[Coeff; 2]> },
    Mul2 { children: [usize; 2], scalars: Option<[Coeff; 2]> },
    Mul3 { children: [usize; 3] },
    /// Computes `-s * a^3`; `s` defaults to 1.
    NegCube { child: usize, scalar: Option<Coeff> },
    Alpha,
    Z,
}

impl Gate {
    pub fn leaf(form: LinearForm) -> Gate {
        Gate::Input { form, constant: Coeff::zero() }
    }

    pub fn children(&self) -> Vec<usize> {
        match self {
            Gate::Add { children, .. } | Gate::Mul2 { children, .. } => children.to_vec(),
            Gate::Mul3 { children } => children.to_vec(),
            Gate::NegCube { child, .. } => vec![*child],
            _ => Vec::new(),
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, Gate::Input { .. } | Gate::Alpha | Gate::Z)
    }

    pub fn is_product(&self) -> bool {
        matches!(self, Gate::Mul2 { .. } | Gate::Mul3 { .. } | Gate::NegCube { .. })
    }

    fn kind_name(&self) -> &'static str {
        match self {
            Gate::Input { .. } => "input",
            Gate::Add { .. } => "add",
            Gate::Mul2 { .. } => "mul",
            Gate::Mul3 { .. } => "mul3",
            Gate::NegCube { .. } => "negcube",
            Gate::Alpha => "alpha",
            Gate::Z => "zvar",
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CircuitError {
    #[error("syntax error at line {line}, column {col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("cycle through gate {gate}")]
    Cycle { gate: String },
    #[error("basis violation at gate {gate}: {reason}")]
    BasisViolation { gate: usize, reason: String },
    #[error("degree mismatch at gate {gate}")]
    DegreeMismatch { gate: usize },
    #[error("gate {gate} refers to a later or missing gate")]
    BadReference { gate: usize },
    #[error("output gate {0} does not exist")]
    BadOutput(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Circuit {
    pub gates: Vec<Gate>,
    pub output: usize,
    pub shape: Shape,
    pub basis: Basis,
    pub vars: Vec<Var>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Metrics {
    pub size: usize,
    pub depth: usize,
    pub mul_depth: usize,
    /// Per-gate syntactic degree (maximum over children at additions unless graded).
    pub degrees: Vec<u32>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Predicate {
    Ihl,
    Arity3,
    FormulaTree,
    ParityHomogeneous,
    Graded,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub gate: usize,
    pub reason: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "gate g{}: {}", self.gate, self.reason)
    }
}

impl Circuit {
    /// Build and check ordering, shape and basis constraints.
    pub fn new(
        gates: Vec<Gate>,
        output: usize,
        shape: Shape,
        basis: Basis,
    ) -> Result<Circuit, CircuitError> {
        let mut vars = BTreeSet::new();
        for g in &gates {
            if let Gate::Input { form, .. } = g {
                vars.extend(form.terms().map(|(v, _)| *v));
            }
        }
        let c = Circuit {
            gates,
            output,
            shape,
            basis,
            vars: vars.into_iter().collect(),
        };
        c.check()?;
        Ok(c)
    }

    /// The smallest basis admitting every gate.
    pub fn infer_basis(gates: &[Gate]) -> Basis {
        let has = |f: fn(&Gate) -> bool| gates.iter().any(f);
        if has(|g| matches!(g, Gate::NegCube { .. })) {
            Basis::AddNegCube
        } else if has(|g| matches!(g, Gate::Mul3 { .. })) && !has(|g| matches!(g, Gate::Mul2 { .. }))
        {
            Basis::Arity3
        } else {
            Basis::Arity2
        }
    }

    fn check(&self) -> Result<(), CircuitError> {
        if self.output >= self.gates.len() {
            return Err(CircuitError::BadOutput(self.output));
        }
        for (i, g) in self.gates.iter().enumerate() {
            if g.children().iter().any(|&c| c >= i) {
                return Err(CircuitError::BadReference { gate: i });
            }
            let bad = |reason: &str| {
                Err(CircuitError::BasisViolation {
                    gate: i,
                    reason: reason.to_string(),
                })
            };
            match (self.basis, g) {
                (Basis::Arity2, Gate::Mul3 { .. }) => return bad("mul3 in arity2 basis"),
                (Basis::Arity2 | Basis::Arity3, Gate::NegCube { .. }) => {
                    return bad("negcube outside addnegcube basis")
                }
                (Basis::Arity3, Gate::Mul2 { .. }) => return bad("mul in arity3 basis"),
                (Basis::AddNegCube, Gate::Mul2 { .. } | Gate::Mul3 { .. }) => {
                    return bad("product gate in addnegcube basis")
                }
                _ => {}
            }
            if self.shape == Shape::Formula {
                match g {
                    Gate::Add { scalars: Some(_), .. } if self.basis != Basis::AddNegCube => {
                        return bad("edge scalars are not allowed in formulas")
                    }
                    Gate::Mul2 { scalars: Some(_), .. } => {
                        return bad("edge scalars are not allowed in formulas")
                    }
                    _ => {}
                }
            }
        }
        if self.shape == Shape::Formula {
            if let Err(v) = self.check_tree() {
                return Err(CircuitError::BasisViolation {
                    gate: v.gate,
                    reason: v.reason,
                });
            }
        }
        Ok(())
    }

    fn check_tree(&self) -> Result<(), Violation> {
        let mut parents = vec![0usize; self.gates.len()];
        for g in &self.gates {
            for c in g.children() {
                parents[c] += 1;
            }
        }
        for (i, &p) in parents.iter().enumerate() {
            if i == self.output && p != 0 {
                return Err(Violation {
                    gate: i,
                    reason: "output gate has a parent".into(),
                });
            }
            if i != self.output && p != 1 {
                return Err(Violation {
                    gate: i,
                    reason: format!("gate has {} parents in a formula", p),
                });
            }
        }
        Ok(())
    }

    pub fn size(&self) -> usize {
        self.gates.len()
    }

    /// Polynomials computed at every gate.
    pub fn eval_all(&self) -> Vec<Polynomial> {
        let mut vals: Vec<Polynomial> = Vec::with_capacity(self.gates.len());
        for g in &self.gates {
            let v = match g {
                Gate::Input { form, constant } => {
                    &form.to_polynomial() + &Polynomial::constant(constant.clone())
                }
                Gate::Alpha => Polynomial::constant(Coeff::alpha(1)),
                Gate::Z => Polynomial::var(Var::z()),
                Gate::Add { children: [a, b], scalars } => match scalars {
                    None => &vals[*a] + &vals[*b],
                    Some([s, t]) => &vals[*a].scale(s) + &vals[*b].scale(t),
                },
                Gate::Mul2 { children: [a, b], scalars } => match scalars {
                    None => &vals[*a] * &vals[*b],
                    Some([s, t]) => &vals[*a].scale(s) * &vals[*b].scale(t),
                },
                Gate::Mul3 { children: [a, b, c] } => &(&vals[*a] * &vals[*b]) * &vals[*c],
                Gate::NegCube { child, scalar } => {
                    let cube = vals[*child].pow(3);
                    let s = scalar.clone().unwrap_or_else(Coeff::one);
                    cube.scale(&-&s)
                }
            };
            vals.push(v);
        }
        vals
    }

    pub fn eval(&self) -> Polynomial {
        self.eval_all().swap_remove(self.output)
    }

    /// Gates reachable from the output.
    pub fn reachable(&self) -> Vec<bool> {
        let mut seen = vec![false; self.gates.len()];
        seen[self.output] = true;
        for i in (0..self.gates.len()).rev() {
            if seen[i] {
                for c in self.gates[i].children() {
                    seen[c] = true;
                }
            }
        }
        seen
    }

    /// Syntactic degree per gate; with `graded`, additions must have equal-degree children.
    pub fn degrees(&self, graded: bool) -> Result<Vec<u32>, CircuitError> {
        let mut deg: Vec<u32> = Vec::with_capacity(self.gates.len());
        for (i, g) in self.gates.iter().enumerate() {
            let d = match g {
                Gate::Input { form, constant } => {
                    let lin = !form.is_zero();
                    if graded && lin && !constant.is_zero() {
                        return Err(CircuitError::DegreeMismatch { gate: i });
                    }
                    u32::from(lin)
                }
                Gate::Alpha => 0,
                Gate::Z => 1,
                Gate::Add { children: [a, b], .. } => {
                    if graded && deg[*a] != deg[*b] {
                        return Err(CircuitError::DegreeMismatch { gate: i });
                    }
                    deg[*a].max(deg[*b])
                }
                Gate::Mul2 { children: [a, b], .. } => deg[*a] + deg[*b],
                Gate::Mul3 { children: [a, b, c] } => deg[*a] + deg[*b] + deg[*c],
                Gate::NegCube { child, .. } => 3 * deg[*child],
            };
            deg.push(d);
        }
        Ok(deg)
    }

    pub fn metrics(&self, graded: bool) -> Result<Metrics, CircuitError> {
        let degrees = self.degrees(graded)?;
        let mut depth = vec![0usize; self.gates.len()];
        let mut mdepth = vec![0usize; self.gates.len()];
        for (i, g) in self.gates.iter().enumerate() {
            let ch = g.children();
            if let Some(d) = ch.iter().map(|&c| depth[c]).max() {
                depth[i] = d + 1;
            }
            let m = ch.iter().map(|&c| mdepth[c]).max().unwrap_or(0);
            mdepth[i] = m + usize::from(g.is_product());
        }
        Ok(Metrics {
            size: self.gates.len(),
            depth: depth[self.output],
            mul_depth: mdepth[self.output],
            degrees,
        })
    }

    pub fn depth(&self) -> usize {
        self.metrics(false).expect("ungraded metrics never fail").depth
    }

    pub fn validate(&self, pred: Predicate) -> Result<(), Violation> {
        let reach = self.reachable();
        let live = |i: usize| reach[i];
        match pred {
            Predicate::Ihl => {
                for (i, g) in self.gates.iter().enumerate().filter(|(i, _)| live(*i)) {
                    match g {
                        Gate::Input { constant, .. } if !constant.is_zero() => {
                            return Err(Violation {
                                gate: i,
                                reason: "leaf is not homogeneous linear".into(),
                            })
                        }
                        Gate::Alpha => {
                            return Err(Violation {
                                gate: i,
                                reason: "alpha leaf is a constant".into(),
                            })
                        }
                        _ => {}
                    }
                }
                Ok(())
            }
            Predicate::Arity3 => {
                for (i, g) in self.gates.iter().enumerate().filter(|(i, _)| live(*i)) {
                    if matches!(g, Gate::Mul2 { .. } | Gate::NegCube { .. }) {
                        return Err(Violation {
                            gate: i,
                            reason: format!("{} gate outside the arity-3 basis", g.kind_name()),
                        });
                    }
                }
                Ok(())
            }
            Predicate::FormulaTree => self.check_tree(),
            Predicate::ParityHomogeneous => {
                for (i, v) in self.eval_all().iter().enumerate().filter(|(i, _)| live(*i)) {
                    let (odd, even) = v.parity_parts();
                    if !odd.is_zero() && !even.is_zero() {
                        return Err(Violation {
                            gate: i,
                            reason: "gate has both odd and even components".into(),
                        });
                    }
                }
                Ok(())
            }
            Predicate::Graded => match self.degrees(true) {
                Ok(_) => Ok(()),
                Err(CircuitError::DegreeMismatch { gate }) => Err(Violation {
                    gate,
                    reason: "children of unequal syntactic degree".into(),
                }),
                Err(e) => Err(Violation {
                    gate: self.output,
                    reason: e.to_string(),
                }),
            },
        }
    }

    /// Drop gates not reachable from the output, keeping relative order.
    pub fn pruned(&self) -> Circuit {
        let reach = self.reachable();
        let mut map = vec![usize::MAX; self.gates.len()];
        let mut gates = Vec::new();
        for (i, g) in self.gates.iter().enumerate() {
            if !reach[i] {
                continue;
            }
            map[i] = gates.len();
            gates.push(remap(g, &map));
        }
        Circuit {
            output: map[self.output],
            gates,
            shape: self.shape,
            basis: self.basis,
            vars: self.vars.clone(),
        }
    }

    /// The constant-zero circuit.
    pub fn zero(shape: Shape, basis: Basis) -> Circuit {
        Circuit {
            gates: vec![Gate::leaf(LinearForm::zero())],
            output: 0,
            shape,
            basis,
            vars: Vec::new(),
        }
    }

    /// Tree view; shared gates become shared subtrees.
    pub fn to_tree(&self) -> Formula {
        let mut nodes: Vec<Option<Formula>> = vec![None; self.gates.len()];
        let reach = self.reachable();
        for (i, g) in self.gates.iter().enumerate() {
            if !reach[i] {
                continue;
            }
            let n = |j: usize| nodes[j].clone().expect("child built before parent");
            let node = match g {
                Gate::Input { form, constant } => Node::Input {
                    form: form.clone(),
                    constant: constant.clone(),
                },
                Gate::Alpha => Node::Alpha,
                Gate::Z => Node::Z,
                Gate::Add { children: [a, b], scalars } => Node::Add(n(*a), n(*b), scalars.clone()),
                Gate::Mul2 { children: [a, b], scalars } => {
                    Node::Mul2(n(*a), n(*b), scalars.clone())
                }
                Gate::Mul3 { children: [a, b, c] } => Node::Mul3(n(*a), n(*b), n(*c)),
                Gate::NegCube { child, scalar } => Node::NegCube(n(*child), scalar.clone()),
            };
            nodes[i] = Some(std::sync::Arc::new(node));
        }
        nodes[self.output].clone().expect("output reachable")
    }

    pub fn parse(text: &str) -> Result<Circuit, CircuitError> {
        text::parse(text)
    }

    pub fn to_text(&self) -> String {
        text::print(self)
    }
}

fn remap(g: &Gate, map: &[usize]) -> Gate {
    match g {
        Gate::Add { children: [a, b], scalars } => Gate::Add {
            children: [map[*a], map[*b]],
            scalars: scalars.clone(),
        },
        Gate::Mul2 { children: [a, b], scalars } => Gate::Mul2 {
            children: [map[*a], map[*b]],
            scalars: scalars.clone(),
        },
        Gate::Mul3 { children: [a, b, c] } => Gate::Mul3 {
            children: [map[*a], map[*b], map[*c]],
        },
        Gate::NegCube { child, scalar } => Gate::NegCube {
            child: map[*child],
            scalar: scalar.clone(),
        },
        other => other.clone(),
    }
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_text())
    }
}

/// Incremental construction with topological ids.
#[derive(Default, Clone, Debug)]
pub struct Builder {
    pub gates: Vec<Gate>,
}

impl Builder {
    pub fn new() -> Builder {
        Builder::default()
    }

    pub fn push(&mut self, g: Gate) -> usize {
        self.gates.push(g);
        self.gates.len() - 1
    }

    pub fn leaf(&mut self, form: LinearForm) -> usize {
        self.push(Gate::leaf(form))
    }

    pub fn var(&mut self, v: Var) -> usize {
        self.leaf(LinearForm::var(v))
    }

    pub fn add(&mut self, a: usize, b: usize) -> usize {
        self.push(Gate::Add { children: [a, b], scalars: None })
    }

    pub fn add_scaled(&mut self, a: usize, b: usize, s: Coeff, t: Coeff) -> usize {
        self.push(Gate::Add { children: [a, b], scalars: Some([s, t]) })
    }

    pub fn mul(&mut self, a: usize, b: usize) -> usize {
        self.push(Gate::Mul2 { children: [a, b], scalars: None })
    }

    pub fn mul3(&mut self, a: usize, b: usize, c: usize) -> usize {
        self.push(Gate::Mul3 { children: [a, b, c] })
    }

    pub fn negcube(&mut self, a: usize, scalar: Option<Coeff>) -> usize {
        self.push(Gate::NegCube { child: a, scalar })
    }

    /// Balanced binary sum; `None` for an empty list.
    pub fn balanced_sum(&mut self, mut items: Vec<usize>) -> Option<usize> {
        if items.is_empty() {
            return None;
        }
        while items.len() > 1 {
            let mut next = Vec::with_capacity(items.len().div_ceil(2));
            for pair in items.chunks(2) {
                match pair {
                    [a, b] => next.push(self.add(*a, *b)),
                    [a] => next.push(*a),
                    _ => unreachable!(),
                }
            }
            items = next;
        }
        items.pop()
    }

    pub fn finish(self, output: usize, shape: Shape, basis: Basis) -> Result<Circuit, CircuitError> {
        Circuit::new(self.gates, output, shape, basis)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(i: u64) -> LinearForm {
        LinearForm::var(Var::x(i))
    }

    #[test]
    fn eval_examples() {
        let mut b = Builder::new();
        let (a, c) = (b.leaf(x(1)), b.leaf(x(2)));
        let m = b.mul(a, c);
        let circ = b.finish(m, Shape::Formula, Basis::Arity2).unwrap();
        assert_eq!(circ.eval(), Polynomial::parse("x1*x2").unwrap());

        let mut b = Builder::new();
        let a = b.leaf(x(1));
        let n = b.negcube(a, None);
        let circ = b.finish(n, Shape::Formula, Basis::AddNegCube).unwrap();
        assert_eq!(circ.eval(), Polynomial::parse("-x1^3").unwrap());

        let mut b = Builder::new();
        let (l1, l2) = (b.leaf(x(1)), b.leaf(x(2)));
        let s = b.add(l1, l2);
        let (l3, l4) = (b.leaf(x(1)), b.leaf(x(3)));
        let m = b.mul3(s, l3, l4);
        let circ = b.finish(m, Shape::Formula, Basis::Arity3).unwrap();
        let expect = &(&Polynomial::parse("x1 + x2").unwrap() * &Polynomial::x(1)) * &Polynomial::x(3);
        assert_eq!(circ.eval(), expect);
    }

    #[test]
    fn metrics_examples() {
        let mut b = Builder::new();
        let l = b.leaf(x(1));
        let c = b.finish(l, Shape::Formula, Basis::Arity2).unwrap();
        let m = c.metrics(true).unwrap();
        assert_eq!((m.size, m.depth, m.degrees[0]), (1, 0, 1));

        let mut b = Builder::new();
        let ls: Vec<usize> = (1..=3).map(|i| b.leaf(x(i))).collect();
        let p = b.mul3(ls[0], ls[1], ls[2]);
        let c = b.clone().finish(p, Shape::Formula, Basis::Arity3).unwrap();
        let m = c.metrics(true).unwrap();
        assert_eq!((m.size, m.depth, m.degrees[p]), (4, 1, 3));

        let (l4, l5) = (b.leaf(x(4)), b.leaf(x(5)));
        let q = b.mul3(p, l4, l5);
        let c = b.finish(q, Shape::Formula, Basis::Arity3).unwrap();
        assert_eq!(c.metrics(true).unwrap().degrees[q], 5);
    }

    #[test]
    fn degree_mismatch() {
        let mut b = Builder::new();
        let ls: Vec<usize> = (1..=4).map(|i| b.leaf(x(i))).collect();
        let p = b.mul3(ls[0], ls[1], ls[2]);
        let s = b.add(p, ls[3]);
        let c = b.finish(s, Shape::Formula, Basis::Arity3).unwrap();
        assert_eq!(c.metrics(true), Err(CircuitError::DegreeMismatch { gate: s }));
        assert!(c.metrics(false).is_ok());
        assert_eq!(c.validate(Predicate::Graded).unwrap_err().gate, s);
    }

    #[test]
    fn validate_examples() {
        let mut b = Builder::new();
        let l = b.leaf(x(1));
        let k = b.push(Gate::Input { form: LinearForm::zero(), constant: Coeff::int(3) });
        let s = b.add(l, k);
        let c = b.finish(s, Shape::Formula, Basis::Arity2).unwrap();
        assert_eq!(c.validate(Predicate::Ihl).unwrap_err().gate, k);

        let mut b = Builder::new();
        let (l1, l2) = (b.leaf(x(1)), b.leaf(x(2)));
        let m = b.mul(l1, l2);
        let c = b.finish(m, Shape::Formula, Basis::Arity2).unwrap();
        assert_eq!(c.validate(Predicate::Arity3).unwrap_err().gate, m);

        // x1 + x1*x2 mixes parities at the root.
        let mut b = Builder::new();
        let (l1, l2, l3) = (b.leaf(x(1)), b.leaf(x(1)), b.leaf(x(2)));
        let m = b.mul(l2, l3);
        let s = b.add(l1, m);
        let c = b.finish(s, Shape::Formula, Basis::Arity2).unwrap();
        assert_eq!(c.validate(Predicate::ParityHomogeneous).unwrap_err().gate, s);
        assert!(c.validate(Predicate::FormulaTree).is_ok());
    }

    #[test]
    fn formula_shape_rules() {
        let mut b = Builder::new();
        let l = b.leaf(x(1));
        let s = b.add(l, l);
        assert!(matches!(
            b.finish(s, Shape::Formula, Basis::Arity2),
            Err(CircuitError::BasisViolation { .. })
        ));
        let mut b = Builder::new();
        let (l1, l2) = (b.leaf(x(1)), b.leaf(x(2)));
        let m = b.mul3(l1, l2, l1);
        assert!(b.finish(m, Shape::Circuit, Basis::Arity2).is_err());
    }

    #[test]
    fn balanced_sum_depth() {
        let mut b = Builder::new();
        let ls: Vec<usize> = (1..=8).map(|i| b.leaf(x(i))).collect();
        let s = b.balanced_sum(ls).unwrap();
        let c = b.finish(s, Shape::Formula, Basis::Arity2).unwrap();
        assert_eq!(c.depth(), 3);
    }
}
