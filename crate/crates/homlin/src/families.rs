//! Graded polynomial families and their evaluation at linear forms.
//!
//! Variable names: `C` and `P` use `x1..xn`; `Q` uses `x_{i,j}`; `IMM` uses
//! `x_{i,j,k}` (row, column, factor); `nce` and `nceL` use `x_{a,b,i}` for
//! entry `(a,b)` of factor `i`; `E` uses `x_{i,a,b}`.

use std::fmt;

use thiserror::Error;

use crate::poly::{Coeff, Monomial, Polynomial, Var};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FamilyError {
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
}

/// Square matrix of polynomials, row major.
pub type Matrix = Vec<Vec<Polynomial>>;

pub fn identity(dim: usize) -> Matrix {
    (0..dim)
        .map(|i| (0..dim).map(|j| if i == j { Polynomial::one() } else { Polynomial::zero() }).collect())
        .collect()
}

pub fn zero_matrix(dim: usize) -> Matrix {
    vec![vec![Polynomial::zero(); dim]; dim]
}

/// `a * b`, dropping monomials above `max_deg` when given.
pub fn mat_mul(a: &Matrix, b: &Matrix, max_deg: Option<u32>) -> Matrix {
    let n = a.len();
    let one = Polynomial::one();
    let mut out = zero_matrix(n);
    for i in 0..n {
        for k in 0..n {
            if a[i][k].is_zero() {
                continue;
            }
            for j in 0..n {
                if b[k][j].is_zero() {
                    continue;
                }
                if i == k && a[i][k] == one {
                    out[i][j] += &b[k][j];
                    continue;
                }
                if k == j && b[k][j] == one {
                    out[i][j] += &a[i][k];
                    continue;
                }
                let p = match max_deg {
                    Some(d) => a[i][k].mul_truncated(&b[k][j], d),
                    None => &a[i][k] * &b[k][j],
                };
                out[i][j] += &p;
            }
        }
    }
    out
}

/// A linear functional on 3x3 matrices, `L(M) = sum w_ij * M_ij`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Functional {
    pub weights: [[Coeff; 3]; 3],
}

impl Functional {
    /// Entry `(i, j)`, 1-based.
    pub fn entry(i: usize, j: usize) -> Functional {
        let mut weights: [[Coeff; 3]; 3] = Default::default();
        weights[i - 1][j - 1] = Coeff::one();
        Functional { weights }
    }

    pub fn trace() -> Functional {
        let mut weights: [[Coeff; 3]; 3] = Default::default();
        for (i, row) in weights.iter_mut().enumerate() {
            row[i] = Coeff::one();
        }
        Functional { weights }
    }

    pub fn sum_of_entries() -> Functional {
        Functional { weights: std::array::from_fn(|_| std::array::from_fn(|_| Coeff::one())) }
    }

    pub fn is_zero(&self) -> bool {
        self.weights.iter().flatten().all(Coeff::is_zero)
    }

    pub fn off_diagonal(&self) -> bool {
        (0..3).all(|i| self.weights[i][i].is_zero())
    }

    pub fn apply(&self, m: &Matrix) -> Polynomial {
        let mut out = Polynomial::zero();
        for i in 0..3 {
            for j in 0..3 {
                let w = &self.weights[i][j];
                if !w.is_zero() {
                    out += &m[i][j].scale(w);
                }
            }
        }
        out
    }

    /// `entry(i,j)`, `trace`, `sum` or `L(w11,w12,...,w33)`.
    pub fn parse(s: &str) -> Option<Functional> {
        let s = s.trim();
        match s {
            "trace" => return Some(Functional::trace()),
            "sum" => return Some(Functional::sum_of_entries()),
            _ => {}
        }
        if let Some(inner) = s.strip_prefix("entry(").and_then(|r| r.strip_suffix(')')) {
            let (i, j) = inner.split_once(',')?;
            let (i, j): (usize, usize) = (i.trim().parse().ok()?, j.trim().parse().ok()?);
            return ((1..=3).contains(&i) && (1..=3).contains(&j)).then(|| Functional::entry(i, j));
        }
        let inner = s.strip_prefix("L(")?.strip_suffix(')')?;
        let ws: Vec<Coeff> = inner.split(',').map(|w| Coeff::parse(w.trim())).collect::<Result<_, _>>().ok()?;
        if ws.len() != 9 {
            return None;
        }
        Some(Functional { weights: std::array::from_fn(|i| std::array::from_fn(|j| ws[3 * i + j].clone())) })
    }
}

impl fmt::Display for Functional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let nz: Vec<(usize, usize)> =
            (0..3).flat_map(|i| (0..3).map(move |j| (i, j))).filter(|&(i, j)| !self.weights[i][j].is_zero()).collect();
        if let [(i, j)] = nz[..] {
            if self.weights[i][j].is_one() {
                return write!(f, "entry({},{})", i + 1, j + 1);
            }
        }
        if *self == Functional::trace() {
            return write!(f, "trace");
        }
        let ws: Vec<String> = self.weights.iter().flatten().map(Coeff::to_compact).collect();
        write!(f, "L({})", ws.join(","))
    }
}

impl fmt::Debug for Functional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// The families that can be generated by name.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Family {
    Imm,
    /// `nce` with 9 variables per factor and `L` the sum of all entries.
    NceGeneric,
    NceL(Functional),
    Ccomb,
    Cmatrix,
    E,
    P,
    Q,
}

impl Family {
    pub fn parse(name: &str, functional: Option<&Functional>) -> Option<Family> {
        Some(match name.to_ascii_lowercase().as_str() {
            "imm" => Family::Imm,
            "nce" | "ncegeneric" => Family::NceGeneric,
            "ncel" => Family::NceL(functional.cloned().unwrap_or_else(Functional::trace)),
            "c" | "ccomb" => Family::Ccomb,
            "cmatrix" => Family::Cmatrix,
            "e" => Family::E,
            "p" => Family::P,
            "q" => Family::Q,
            _ => return None,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FamilySpec {
    pub family: Family,
    pub n: usize,
    pub d: u32,
}

impl FamilySpec {
    pub fn new(family: Family, n: usize, d: u32) -> FamilySpec {
        FamilySpec { family, n, d }
    }
}

pub fn gen_family(spec: &FamilySpec) -> Result<Polynomial, FamilyError> {
    let (n, d) = (spec.n, spec.d);
    if n == 0 {
        return Err(FamilyError::InvalidParameters("n must be at least 1".into()));
    }
    Ok(match &spec.family {
        Family::P => p_family(n, d),
        Family::Q => q_family(n, d),
        Family::Imm => imm(n, d),
        Family::Ccomb => c_comb(n, d),
        Family::Cmatrix => c_matrix(n, d),
        Family::E => e_family(n, d),
        Family::NceGeneric => Functional::sum_of_entries().apply(&nce_generic_matrix(n, d)),
        Family::NceL(l) => nce_l(l, n, d),
    })
}

fn x(i: usize) -> Polynomial {
    Polynomial::x(i as u64)
}

fn xv(idx: &[usize]) -> Polynomial {
    let idx: Vec<u64> = idx.iter().map(|&i| i as u64).collect();
    Polynomial::var(Var::new('x', &idx))
}

pub fn p_family(n: usize, d: u32) -> Polynomial {
    let mut out = Polynomial::zero();
    for i in 1..=n {
        out += &x(i).pow(d);
    }
    out
}

pub fn q_family(n: usize, d: u32) -> Polynomial {
    let mut out = Polynomial::zero();
    for i in 1..=n {
        let mut t = Polynomial::one();
        for j in 1..=d as usize {
            t = &t * &xv(&[i, j]);
        }
        out += &t;
    }
    out
}

/// Row vector, `d - 2` square matrices, column vector. `IMM(n, 1)` is the
/// single variable `x_{1,1,1}` and `IMM(n, 0) = 1`.
pub fn imm(n: usize, d: u32) -> Polynomial {
    let d = d as usize;
    match d {
        0 => return Polynomial::one(),
        1 => return xv(&[1, 1, 1]),
        _ => {}
    }
    let mut row: Vec<Polynomial> = (1..=n).map(|j| xv(&[1, j, 1])).collect();
    for k in 2..d {
        row = (1..=n)
            .map(|j| {
                let mut acc = Polynomial::zero();
                for (i, r) in row.iter().enumerate() {
                    acc += &(r * &xv(&[i + 1, j, k]));
                }
                acc
            })
            .collect();
    }
    let mut out = Polynomial::zero();
    for (i, r) in row.iter().enumerate() {
        out += &(r * &xv(&[i + 1, 1, d]));
    }
    out
}

/// Parity-alternating elementary symmetric polynomial, by enumerating the
/// increasing sequences `i_1 < ... < i_d` with `i_j = j (mod 2)`.
pub fn c_comb(n: usize, d: u32) -> Polynomial {
    let mut out = Polynomial::zero();
    let mut seq = Vec::with_capacity(d as usize);
    fn go(n: usize, d: usize, seq: &mut Vec<usize>, out: &mut Polynomial) {
        let j = seq.len() + 1;
        if j > d {
            let m = Monomial::from_pairs(seq.iter().map(|&i| (Var::x(i as u64), 1)).collect());
            out.add_term(m, &Coeff::one());
            return;
        }
        let start = seq.last().map_or(1, |&i| i + 1);
        for i in start..=n {
            if i % 2 == j % 2 {
                seq.push(i);
                go(n, d, seq, out);
                seq.pop();
            }
        }
    }
    go(n, d as usize, &mut seq, &mut out);
    out
}

/// Number of increasing parity-alternating sequences of length `d` in `1..=n`.
pub fn c_count(n: usize, d: u32) -> u64 {
    fn go(n: usize, d: usize, j: usize, start: usize) -> u64 {
        if j > d {
            return 1;
        }
        (start..=n).filter(|i| i % 2 == j % 2).map(|i| go(n, d, j + 1, i + 1)).sum()
    }
    go(n, d as usize, 1, 1)
}

/// Degree-`d` part of `A_11 + A_12` for `A = (id + x_1 X_1) ... (id + x_n X_n)`,
/// where `X_i` is the upper shift for odd `i` and the lower shift for even `i`.
pub fn c_matrix(n: usize, d: u32) -> Polynomial {
    let mut m = identity(2);
    for i in 1..=n {
        let mut f = identity(2);
        if i % 2 == 1 {
            f[0][1] = x(i);
        } else {
            f[1][0] = x(i);
        }
        m = mat_mul(&m, &f, Some(d));
    }
    (&m[0][0] + &m[0][1]).homog_component(d)
}

/// `C_{r,d}(forms)` by dynamic programming over positions.
pub fn c_at(forms: &[Polynomial], d: u32) -> Polynomial {
    let d = d as usize;
    let mut s: Vec<Polynomial> = vec![Polynomial::zero(); d + 1];
    s[0] = Polynomial::one();
    for (idx, l) in forms.iter().enumerate() {
        let i = idx + 1;
        if l.is_zero() {
            continue;
        }
        for j in (1..=d.min(i)).rev() {
            if i % 2 == j % 2 && !s[j - 1].is_zero() {
                let t = &s[j - 1] * l;
                s[j] += &t;
            }
        }
    }
    s.swap_remove(d)
}

/// `nce_d(A_1, ..., A_r)` as a 3x3 matrix, by dynamic programming.
pub fn nce_at(mats: &[Matrix], d: u32) -> Matrix {
    let d = d as usize;
    let dim = mats.first().map_or(3, Vec::len);
    let mut s: Vec<Matrix> = vec![zero_matrix(dim); d + 1];
    s[0] = identity(dim);
    for (idx, a) in mats.iter().enumerate() {
        for j in (1..=d.min(idx + 1)).rev() {
            let t = mat_mul(&s[j - 1], a, None);
            for (row, trow) in s[j].iter_mut().zip(t) {
                for (e, te) in row.iter_mut().zip(trow) {
                    *e += &te;
                }
            }
        }
    }
    s.swap_remove(d)
}

/// Factor `i` (1-based) of `nceL`: zero diagonal, entries `x_{a,b,i}`.
pub fn nce_l_factor(i: usize) -> Matrix {
    let mut m = zero_matrix(3);
    for a in 0..3 {
        for b in 0..3 {
            if a != b {
                m[a][b] = xv(&[a + 1, b + 1, i]);
            }
        }
    }
    m
}

/// Factor `i` of the generic family: all nine entries `x_{a,b,i}`.
pub fn nce_generic_factor(i: usize) -> Matrix {
    (0..3).map(|a| (0..3).map(|b| xv(&[a + 1, b + 1, i])).collect()).collect()
}

pub fn nce_generic_matrix(n: usize, d: u32) -> Matrix {
    let mats: Vec<Matrix> = (1..=n).map(nce_generic_factor).collect();
    nce_at(&mats, d)
}

/// `L(nce_d(A_1, ..., A_n))` with zero-diagonal factors; `1` at `d = 0`.
pub fn nce_l(l: &Functional, n: usize, d: u32) -> Polynomial {
    if d == 0 {
        return Polynomial::one();
    }
    let mats: Vec<Matrix> = (1..=n).map(nce_l_factor).collect();
    l.apply(&nce_at(&mats, d))
}

/// Degree-`d` part of the sum of the entries of `prod_i (id + A_i)` with
/// zero-diagonal factors in the variables `x_{i,a,b}`.
pub fn e_family(n: usize, d: u32) -> Polynomial {
    let mut m = identity(3);
    for i in 1..=n {
        let mut f = identity(3);
        for a in 0..3 {
            for b in 0..3 {
                if a != b {
                    f[a][b] = xv(&[i, a + 1, b + 1]);
                }
            }
        }
        m = mat_mul(&m, &f, Some(d));
    }
    Functional::sum_of_entries().apply(&m).homog_component(d)
}

/// `sum_{i=0}^{d_n} a_{n,i} f_{m_n, i}`: the ungraded family attached to a
/// graded one.
pub fn varphi_combine(
    f: impl Fn(usize, u32) -> Polynomial,
    a: impl Fn(usize, u32) -> Coeff,
    m: impl Fn(usize) -> usize,
    d: impl Fn(usize) -> u32,
    n: usize,
) -> Polynomial {
    let mut out = Polynomial::zero();
    for i in 0..=d(n) {
        let c = a(n, i);
        if !c.is_zero() {
            out += &f(m(n), i).scale(&c);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Polynomial {
        Polynomial::parse(s).unwrap()
    }

    #[test]
    fn c53() {
        assert_eq!(c_comb(5, 3), p("x1*x2*x3 + x1*x2*x5 + x1*x4*x5 + x3*x4*x5"));
        assert_eq!(c_count(5, 3), 4);
        assert_eq!(c_matrix(5, 3), c_comb(5, 3));
    }

    #[test]
    fn small_families() {
        assert_eq!(p_family(2, 3), p("x1^3 + x2^3"));
        assert_eq!(imm(2, 2), p("x1_1_1*x1_1_2 + x1_2_1*x2_1_2"));
        assert_eq!(e_family(1, 1), p("x1_1_2 + x1_1_3 + x1_2_1 + x1_2_3 + x1_3_1 + x1_3_2"));
        assert_eq!(q_family(2, 2), p("x1_1*x1_2 + x2_1*x2_2"));
        let all: Polynomial = (1..=3)
            .flat_map(|i| (1..=3).flat_map(move |a| (1..=3).map(move |b| xv(&[a, b, i]))))
            .fold(Polynomial::zero(), |acc, v| &acc + &v);
        assert_eq!(gen_family(&FamilySpec::new(Family::NceGeneric, 3, 1)).unwrap(), all);
    }

    #[test]
    fn degree_zero_conventions() {
        assert_eq!(c_comb(4, 0), Polynomial::one());
        assert_eq!(nce_l(&Functional::entry(1, 2), 3, 0), Polynomial::one());
        assert!(c_comb(3, 4).is_zero());
    }

    #[test]
    fn varphi_examples() {
        let ones = varphi_combine(c_comb, |_, _| Coeff::one(), |n| n, |n| n as u32, 2);
        assert_eq!(ones, p("1 + x1 + x1*x2"));
        let zero = varphi_combine(p_family, |_, _| Coeff::zero(), |n| n, |n| n as u32, 3);
        assert!(zero.is_zero());
        let single = varphi_combine(
            p_family,
            |n, i| if n == 2 && i == 3 { Coeff::int(2) } else { Coeff::zero() },
            |n| n,
            |_| 3,
            2,
        );
        assert_eq!(single, p("2*x1^3 + 2*x2^3"));
    }

    #[test]
    fn c_dp_matches_enumeration() {
        let forms: Vec<Polynomial> = (1..=7).map(x).collect();
        for d in 0..=7 {
            assert_eq!(c_at(&forms, d), c_comb(7, d));
        }
    }

    #[test]
    fn functional_text() {
        for l in [Functional::entry(1, 3), Functional::trace(), Functional::sum_of_entries()] {
            assert_eq!(Functional::parse(&l.to_string()), Some(l));
        }
    }
}
