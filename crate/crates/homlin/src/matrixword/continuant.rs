//! Border projections onto the parity-alternating family `C_{r,d}`.
//!
//! A word here is a list of linear forms `l_1, l_2, ...` standing for
//! `(id + l_1 E_o)(id + l_2 E_e)(id + l_3 E_o)...` with `E_o = E_12` and
//! `E_e = E_21`. Every word built for a gate has odd length, starts and ends
//! on `E_o`, and satisfies `product - id = alpha * f * E_o + O(eps)`, where
//! `alpha` is a formal parameter carried in the coefficients. Gate scalars
//! are absorbed into `alpha`, so no roots are ever taken.

use std::collections::HashMap;
use std::sync::Arc;

use crate::circuit::tree::{self, Formula, Node};
use crate::circuit::{Circuit, Predicate, Shape};
use crate::families::Matrix;
use crate::poly::{q, qi, Coeff, LinearForm, Polynomial};
use crate::transforms::{add_negcube_tree, brent3_tree, Brent3Audit, GradedArity3Repr};

use super::{max_k, CompileError, Factor, MatrixWord, Projection, ProjectionFamily, Target};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ContinuantReport {
    /// Word length including zero padding.
    pub r: usize,
    pub pads: usize,
    /// Largest precision exponent used by a negated-cube gadget.
    pub max_k: i64,
    /// Depth of the sum/negated-cube formula (largest over parts).
    pub depth: usize,
    /// Allowed unpadded length: `3^depth`, or `2*3^depth + 2` per variable
    /// block in the even case.
    pub bound: u128,
    pub negcubes: usize,
}

impl ContinuantReport {
    pub fn unpadded(&self) -> usize {
        self.r - self.pads
    }

    pub fn within_bound(&self) -> bool {
        self.unpadded() as u128 <= self.bound
    }
}

/// The 2x2 word for a list of forms, starting on `E_o` when `upper_first`.
pub fn word2(forms: &[LinearForm], upper_first: bool) -> MatrixWord {
    let factors = forms
        .iter()
        .enumerate()
        .map(|(i, l)| {
            if (i % 2 == 0) == upper_first {
                Factor::single(0, 1, l.clone())
            } else {
                Factor::single(1, 0, l.clone())
            }
        })
        .collect();
    MatrixWord::new(2, factors, Target::Entry(0, 1))
}

fn subst(word: &[LinearForm], k: i64, alpha: &Coeff) -> Vec<LinearForm> {
    word.iter().map(|l| l.map_coeffs(|c| c.subst_eps_power(k).subst_alpha(alpha))).collect()
}

fn alpha_times(s: &Coeff) -> Coeff {
    &Coeff::alpha(1) * s
}

/// `product(forms) = id + expect * E_o (mod eps^m)` up to x-degree `d`.
fn congruent(forms: &[LinearForm], expect: &Polynomial, m: i64, d: u32) -> bool {
    let w = word2(forms, true);
    let mut p: Matrix = w.expand_with(super::ExpandOpts { max_deg: Some(d), ..Default::default() });
    p[0][0] = &p[0][0] - &Polynomial::one();
    p[1][1] = &p[1][1] - &Polynomial::one();
    p[0][1] = &p[0][1] - expect;
    p.iter().flatten().all(|e| e.map_coeffs(|c| c.mod_eps(m)).is_zero())
}

struct Compiled {
    word: Vec<LinearForm>,
    /// Value of the gate truncated to x-degree `d`.
    value: Polynomial,
    pads: usize,
}

struct Ctx {
    d: u32,
    cap: i64,
    max_k: i64,
    negcubes: usize,
    memo: HashMap<usize, Arc<Compiled>>,
}

impl Ctx {
    fn new(d: u32) -> Ctx {
        Ctx { d, cap: max_k(), max_k: 0, negcubes: 0, memo: HashMap::new() }
    }

    fn compile(&mut self, f: &Formula) -> Result<Arc<Compiled>, CompileError> {
        let key = Arc::as_ptr(f) as usize;
        if let Some(c) = self.memo.get(&key) {
            return Ok(c.clone());
        }
        let out = Arc::new(self.build(f)?);
        self.memo.insert(key, out.clone());
        Ok(out)
    }

    fn build(&mut self, f: &Formula) -> Result<Compiled, CompileError> {
        let d = self.d;
        Ok(match &**f {
            Node::Input { form, constant } => {
                if !constant.is_zero() {
                    return Err(CompileError::NotIhl(format!("leaf {} has a constant term", form)));
                }
                Compiled { word: vec![form.scale(&Coeff::alpha(1))], value: form.to_polynomial(), pads: 0 }
            }
            Node::Add(a, b, sc) => {
                let (sa, sb) = match sc {
                    Some([s, t]) => (s.clone(), t.clone()),
                    None => (Coeff::one(), Coeff::one()),
                };
                let (a, b) = (self.compile(a)?, self.compile(b)?);
                let mut word = subst(&a.word, 1, &alpha_times(&sa));
                word.push(LinearForm::zero());
                word.extend(subst(&b.word, 1, &alpha_times(&sb)));
                let value = &a.value.scale(&sa) + &b.value.scale(&sb);
                Compiled { word, value, pads: a.pads + b.pads + 1 }
            }
            Node::NegCube(c, s) => {
                let s = s.clone().unwrap_or_else(Coeff::one);
                let c = self.compile(c)?;
                self.negcubes += 1;
                let inv = Coeff::eps(-1);
                let neg_inv = Coeff::term(-1, 0, qi(-1));
                let lead = c.value.scale(&inv);
                let mut k = 2 * (1 + c.word.iter().map(LinearForm::max_abs_eps).max().unwrap_or(0));
                let (left, right) = loop {
                    if k > self.cap {
                        return Err(CompileError::PrecisionExhausted { cap: self.cap });
                    }
                    let l = subst(&c.word, k, &inv);
                    let r = subst(&c.word, k, &neg_inv);
                    if congruent(&l, &lead, 2, d) && congruent(&r, &-&lead, 2, d) {
                        break (l, r);
                    }
                    k *= 2;
                };
                self.max_k = self.max_k.max(k);
                let mid_alpha = &Coeff::eps(2) * &alpha_times(&s);
                let mid_expect = c.value.scale(&mid_alpha);
                let mut k3 = 3;
                let mid = loop {
                    if k3 > self.cap {
                        return Err(CompileError::PrecisionExhausted { cap: self.cap });
                    }
                    let m = subst(&c.word, k3, &mid_alpha);
                    if congruent(&m, &mid_expect, 3, d) {
                        break m;
                    }
                    k3 *= 2;
                };
                self.max_k = self.max_k.max(k3);
                let mut word = left;
                word.extend(mid.into_iter().rev());
                word.extend(right);
                let value = c.value.pow(3).truncate_degree(d).scale(&-&s);
                Compiled { word, value, pads: 3 * c.pads }
            }
            Node::Mul2(..) | Node::Mul3(..) => {
                return Err(CompileError::Basis("products must be rewritten as negated cubes first".into()))
            }
            Node::Alpha | Node::Z => return Err(CompileError::Basis("alpha and z leaves are not allowed".into())),
        })
    }
}

fn pow3(depth: usize) -> u128 {
    3u128.saturating_pow(depth as u32)
}

/// Projection with `lim C_{r,d}(forms) = f` for a sum/negated-cube formula
/// computing a homogeneous polynomial `f` of odd degree `d`.
pub fn compile_continuant_odd(c: &Circuit, d: u32) -> Result<(Projection, ContinuantReport), CompileError> {
    if d % 2 == 0 {
        return Err(CompileError::NotOddDegree(d));
    }
    if c.shape != Shape::Formula || c.validate(Predicate::FormulaTree).is_err() {
        return Err(CompileError::NotFormula);
    }
    if let Err(v) = c.validate(Predicate::Ihl) {
        return Err(CompileError::NotIhl(v.to_string()));
    }
    let f = c.eval();
    if !f.is_zero() && (!f.is_homogeneous() || f.degree() != Some(d)) {
        return Err(CompileError::NotHomogeneous(d));
    }
    let root = c.to_tree();
    let mut cx = Ctx::new(d);
    let out = cx.compile(&root)?;
    let forms = subst(&out.word, 1, &Coeff::one());
    let report = ContinuantReport {
        r: forms.len(),
        pads: out.pads,
        max_k: cx.max_k,
        depth: tree::depth(&root),
        bound: pow3(tree::depth(&root)),
        negcubes: cx.negcubes,
    };
    let proj = Projection { family: ProjectionFamily::C { n: forms.len() }, degree: d, forms, scalar: Coeff::one(), border: true };
    Ok((proj, report))
}

/// Projection with `lim C_{r,d}(forms) = f_d` for the even part of degree
/// `d` of a graded arity-3 representation, via Euler's identity
/// `f = sum_i x_i * (1/d) df/dx_i` and the gadget
/// `(id - eps a E_o)(id - eps b E_e)(id + eps a E_o)(id + eps b E_e)
/// = diag(1 + eps^2 ab, 1 - eps^2 ab) (mod eps^3)`.
pub fn compile_continuant_even(g: &GradedArity3Repr, d: u32) -> Result<(Projection, ContinuantReport), CompileError> {
    if d % 2 == 1 || d == 0 {
        return Err(CompileError::NotEvenDegree(d));
    }
    let parts = g.even_parts.get(&d).ok_or(CompileError::MissingPart(d))?;
    let cap = max_k();
    let inv_d = q(1, i64::from(d));
    let mut report = ContinuantReport::default();
    let mut forms: Vec<LinearForm> = Vec::new();
    for (&v, circ) in parts {
        let b = circ.eval();
        if b.is_zero() {
            continue;
        }
        if !b.is_homogeneous() || b.degree() != Some(d - 1) {
            return Err(CompileError::NotHomogeneous(d - 1));
        }
        let mut t = circ.to_tree();
        if circ.validate(Predicate::Graded).is_ok() && circ.validate(Predicate::Arity3).is_ok() {
            t = brent3_tree(&t, &mut Brent3Audit::default());
        }
        let t = add_negcube_tree(&t);
        let mut cx = Ctx::new(d - 1);
        let out = cx.compile(&t)?;
        report.pads += 2 * out.pads;
        report.negcubes += cx.negcubes;
        report.depth = report.depth.max(tree::depth(&t));
        report.bound += 2 * pow3(tree::depth(&t)) + 2;
        report.max_k = report.max_k.max(cx.max_k);
        let plus = Coeff::term(1, 0, inv_d.clone());
        let minus = Coeff::term(1, 0, -inv_d.clone());
        let expect = out.value.scale(&plus);
        let mut k = 3;
        let (bp, bm) = loop {
            if k > cap {
                return Err(CompileError::PrecisionExhausted { cap });
            }
            let bp = subst(&out.word, k, &plus);
            let bm = subst(&out.word, k, &minus);
            if congruent(&bp, &expect, 3, d - 1) && congruent(&bm, &-&expect, 3, d - 1) {
                break (bp, bm);
            }
            k *= 2;
        };
        report.max_k = report.max_k.max(k);
        let x = LinearForm::var(v);
        forms.push(x.scale(&Coeff::term(1, 0, qi(-1))));
        forms.extend(bm.into_iter().rev());
        forms.push(x.scale(&Coeff::eps(1)));
        forms.extend(bp.into_iter().rev());
    }
    let half = i64::from(d / 2);
    let forms: Vec<LinearForm> =
        forms.iter().map(|l| l.map_coeffs(|c| &c.subst_eps_power(half) * &Coeff::eps(-1))).collect();
    report.r = forms.len();
    let proj = Projection { family: ProjectionFamily::C { n: forms.len() }, degree: d, forms, scalar: Coeff::one(), border: true };
    Ok((proj, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transforms::{add_negcube, vf_to_v3p};

    fn p(s: &str) -> Polynomial {
        Polynomial::parse(s).unwrap()
    }

    fn circ(text: &str) -> Circuit {
        Circuit::parse(text).unwrap()
    }

    #[test]
    fn leaf() {
        let c = circ("shape formula\ngate a = input 2*x1\noutput a");
        let (pr, rep) = compile_continuant_odd(&c, 1).unwrap();
        assert_eq!(pr.forms, vec![LinearForm::term(crate::poly::Var::x(1), Coeff::int(2))]);
        assert_eq!(pr.value().unwrap(), p("2*x1"));
        assert_eq!(rep.r, 1);
    }

    #[test]
    fn sum_is_padded() {
        let c = circ("shape formula\ngate a = input x1\ngate b = input x2\ngate s = add a b\noutput s");
        let (pr, rep) = compile_continuant_odd(&c, 1).unwrap();
        assert_eq!(pr.forms.len(), 3);
        assert_eq!(rep.pads, 1);
        assert_eq!(pr.value().unwrap(), p("x1 + x2"));
        assert!(word2(&pr.forms, true).alternates());
    }

    #[test]
    fn negcube_leaf() {
        let c = circ("shape formula\ngate a = input x1\ngate n = negcube a\noutput n");
        let (pr, rep) = compile_continuant_odd(&c, 3).unwrap();
        assert_eq!(pr.value().unwrap(), p("-x1^3"));
        assert!(rep.within_bound());
        assert_eq!(rep.negcubes, 1);
    }

    #[test]
    fn product_through_cubes() {
        let c = circ("shape formula\ngate a = input x1\ngate b = input x2\ngate c = input x1 + x3\ngate m = mul3 a b c\noutput m");
        let n = add_negcube(&c).unwrap();
        let (pr, rep) = compile_continuant_odd(&n, 3).unwrap();
        assert_eq!(pr.value().unwrap(), c.eval());
        assert!(rep.within_bound(), "{:?}", rep);
    }

    #[test]
    fn wrong_parity() {
        let c = circ("shape formula\ngate a = input x1\noutput a");
        assert_eq!(compile_continuant_odd(&c, 2).unwrap_err(), CompileError::NotOddDegree(2));
    }

    fn even(text: &str, d: u32) -> Polynomial {
        let c = circ(text);
        let g = vf_to_v3p(&c).unwrap();
        let (pr, _) = compile_continuant_even(&g, d).unwrap();
        assert!(word2(&pr.forms, true).alternates());
        pr.value().unwrap()
    }

    #[test]
    fn even_products() {
        assert_eq!(even("shape formula\ngate a = input x1\ngate b = input x2\ngate m = mul a b\noutput m", 2), p("x1*x2"));
        assert_eq!(even("shape formula\ngate a = input x1\ngate b = input x1\ngate m = mul a b\noutput m", 2), p("x1^2"));
    }

    #[test]
    fn telescoping() {
        // M(a1 b1) M(a2 b2) = M(a1 b1 + a2 b2) mod eps^3.
        let m = |c: &Polynomial| -> Matrix {
            let e2 = c.scale(&Coeff::eps(2));
            vec![vec![&Polynomial::one() + &e2, Polynomial::zero()], vec![Polynomial::zero(), &Polynomial::one() - &e2]]
        };
        let (a, b) = (p("x1*x2"), p("x3*x4"));
        let prod = crate::families::mat_mul(&m(&a), &m(&b), None);
        let want = m(&(&a + &b));
        for i in 0..2 {
            for j in 0..2 {
                let diff = &prod[i][j] - &want[i][j];
                assert!(diff.map_coeffs(|c| c.mod_eps(3)).is_zero());
            }
        }
    }
}
