//! 3x3 words from arity-2 formulas.
//!
//! `compile_offdiag3` realizes `id + f*E_{i,j}` exactly. A product `f*g` at
//! `(i,j)` goes through the third index `k`:
//! `(id + f E_ik)(id + g E_kj)(id - f E_ik)(id - g E_kj) = id + fg E_ij`,
//! so every node carries a word for `+f` and one for `-f`.

use crate::circuit::{Basis, Circuit, Formula, Node, Predicate, Shape};
use crate::poly::{Coeff, LinearForm};

use super::{CompileError, Factor, MatrixWord, Target};

struct Dual {
    plus: Vec<Factor>,
    minus: Vec<Factor>,
}

fn edge(scalars: &Option<[Coeff; 2]>, idx: usize) -> Coeff {
    scalars.as_ref().map_or_else(Coeff::one, |s| s[idx].clone())
}

fn dual(f: &Formula, i: usize, j: usize, s: &Coeff) -> Result<Dual, CompileError> {
    match &**f {
        Node::Input { form, constant } => {
            if !constant.is_zero() {
                return Err(CompileError::NotIhl(format!("leaf {} has a constant term", form)));
            }
            let l = form.scale(s);
            let neg = l.scale(&Coeff::int(-1));
            Ok(Dual { plus: vec![Factor::single(i, j, l)], minus: vec![Factor::single(i, j, neg)] })
        }
        Node::Add(a, b, sc) => {
            let a = dual(a, i, j, &(s * &edge(sc, 0)))?;
            let b = dual(b, i, j, &(s * &edge(sc, 1)))?;
            Ok(Dual { plus: [a.plus, b.plus].concat(), minus: [a.minus, b.minus].concat() })
        }
        Node::Mul2(a, b, sc) => {
            let k = 3 - i - j;
            let a = dual(a, i, k, &(s * &edge(sc, 0)))?;
            let b = dual(b, k, j, &edge(sc, 1))?;
            let plus = [a.plus.clone(), b.plus.clone(), a.minus.clone(), b.minus.clone()].concat();
            let minus = [a.plus, b.minus, a.minus, b.plus].concat();
            Ok(Dual { plus, minus })
        }
        other => Err(CompileError::Basis(format!("{} is not an arity-2 gate", kind(other)))),
    }
}

fn kind(n: &Node) -> &'static str {
    match n {
        Node::Input { .. } => "input",
        Node::Alpha => "alpha",
        Node::Z => "z",
        Node::Add(..) => "add",
        Node::Mul2(..) => "mul",
        Node::Mul3(..) => "mul3",
        Node::NegCube(..) => "negcube",
    }
}

fn check_input(c: &Circuit) -> Result<Formula, CompileError> {
    if c.shape != Shape::Formula || c.validate(Predicate::FormulaTree).is_err() {
        return Err(CompileError::NotFormula);
    }
    if c.basis != Basis::Arity2 {
        return Err(CompileError::Basis(format!("expected an arity2 formula, got {}", c.basis.name())));
    }
    if let Err(v) = c.validate(Predicate::Ihl) {
        return Err(CompileError::NotIhl(v.to_string()));
    }
    Ok(c.to_tree())
}

/// Word with `product - id = scalar * f * E_{i,j}` exactly (0-based `i != j`).
pub fn compile_offdiag3(c: &Circuit, i: usize, j: usize, scalar: &Coeff) -> Result<MatrixWord, CompileError> {
    if i == j || i > 2 || j > 2 {
        return Err(CompileError::BadTarget(format!("({},{}) is not an off-diagonal position", i + 1, j + 1)));
    }
    let f = check_input(c)?;
    let d = dual(&f, i, j, scalar)?;
    Ok(MatrixWord::new(3, d.plus, Target::Entry(i, j)))
}

fn summands(f: &Formula, s: Coeff, out: &mut Vec<(Formula, Coeff)>) {
    match &**f {
        Node::Add(a, b, sc) => {
            summands(a, &s * &edge(sc, 0), out);
            summands(b, &s * &edge(sc, 1), out);
        }
        _ => out.push((f.clone(), s)),
    }
}

/// Border word for `f` read at entry (1,1) with global scalar `eps^-2`.
///
/// Each product `g*h` in the top-level sum becomes the gadget
/// `(id + eps g E_12)(id + eps h E_21)(id - eps g E_12)(id - eps h E_21)
/// = id + eps^2 gh (E_11 - E_22) + O(eps^3)`; a bare leaf `l` becomes the
/// diagonal factor `id + eps^2 l (E_11 - E_22)`. The limit of
/// `eps^-2 (product - id)` is therefore `f (E_11 - E_22)`.
pub fn compile_trace3(c: &Circuit) -> Result<MatrixWord, CompileError> {
    let f = check_input(c)?;
    let mut parts = Vec::new();
    summands(&f, Coeff::one(), &mut parts);
    let eps = Coeff::eps(1);
    let mut factors = Vec::new();
    for (g, s) in parts {
        match &*g {
            Node::Mul2(a, b, sc) => {
                let a = dual(a, 0, 1, &(&(&eps * &s) * &edge(sc, 0)))?;
                let b = dual(b, 1, 0, &(&eps * &edge(sc, 1)))?;
                factors.extend([a.plus, b.plus, a.minus, b.minus].concat());
            }
            Node::Input { form, constant } => {
                if !constant.is_zero() {
                    return Err(CompileError::NotIhl(format!("leaf {} has a constant term", form)));
                }
                let l: LinearForm = form.scale(&(&Coeff::eps(2) * &s));
                let mut fac = Factor::single(0, 0, l.clone());
                fac.set(1, 1, l.scale(&Coeff::int(-1)));
                factors.push(fac);
            }
            other => return Err(CompileError::Basis(format!("{} is not an arity-2 gate", kind(other)))),
        }
    }
    let mut w = MatrixWord::new(3, factors, Target::Entry(0, 0));
    w.scalar = Coeff::eps(-2);
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrixword::{elementary, matrix_limit, minus_id, scale_matrix};
    use crate::poly::Polynomial;

    fn circ(text: &str) -> Circuit {
        Circuit::parse(text).unwrap()
    }

    fn p(s: &str) -> Polynomial {
        Polynomial::parse(s).unwrap()
    }

    #[test]
    fn leaf_word() {
        let c = circ("shape formula\ngate g0 = input 2*x1\noutput g0\n");
        let w = compile_offdiag3(&c, 0, 2, &Coeff::one()).unwrap();
        assert_eq!(w.len(), 1);
        assert_eq!(w.expand_minus_id(), elementary(3, 0, 2, p("2*x1")));
    }

    #[test]
    fn product_word() {
        let c = circ("shape formula\ngate g0 = input x1\ngate g1 = input x2\ngate g2 = mul g0 g1\noutput g2\n");
        let w = compile_offdiag3(&c, 0, 2, &Coeff::one()).unwrap();
        assert_eq!(w.len(), 4);
        assert_eq!(w.expand_minus_id(), elementary(3, 0, 2, p("x1*x2")));
    }

    #[test]
    fn minus_word_is_dual() {
        let c = circ("shape formula\ngate g0 = input x1\ngate g1 = input x2 + x3\ngate g2 = mul g0 g1\ngate g4 = input x1\ngate g3 = add g2 g4\noutput g3\n");
        let f = c.to_tree();
        let d = dual(&f, 1, 0, &Coeff::int(3)).unwrap();
        let plus = MatrixWord::new(3, d.plus, Target::Entry(1, 0));
        let minus = MatrixWord::new(3, d.minus, Target::Entry(1, 0));
        let v = c.eval().scale(&Coeff::int(3));
        assert_eq!(plus.expand_minus_id(), elementary(3, 1, 0, v.clone()));
        assert_eq!(minus.expand_minus_id(), elementary(3, 1, 0, -&v));
    }

    #[test]
    fn trace_gadget_limit() {
        let c = circ("shape formula\ngate g0 = input x1\ngate g1 = input x2\ngate g2 = mul g0 g1\noutput g2\n");
        let w = compile_trace3(&c).unwrap();
        assert_eq!(w.len(), 4);
        let lim = matrix_limit(&scale_matrix(&minus_id(w.expand()), &w.scalar)).unwrap();
        let mut expect = elementary(3, 0, 0, p("x1*x2"));
        expect[1][1] = p("-x1*x2");
        assert_eq!(lim, expect);
        assert_eq!(w.value().unwrap().eps_limit().unwrap(), p("x1*x2"));
    }

    #[test]
    fn rejects_constants() {
        let c = circ("shape formula\ngate g0 = input x1 + 1\noutput g0\n");
        assert!(matches!(compile_offdiag3(&c, 0, 2, &Coeff::one()), Err(CompileError::NotIhl(_))));
        assert!(compile_offdiag3(&circ("shape formula\ngate g0 = input x1\noutput g0\n"), 1, 1, &Coeff::one()).is_err());
    }
}
