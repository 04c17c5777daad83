//! Exact sparse polynomials over Q[eps, eps^-1][alpha].
//!
//! `Coeff` is a Laurent polynomial in the border parameter `eps` with polynomial
//! dependence on the formal scalar `alpha`. `Polynomial` maps monomials in the
//! x-variables to coefficients; `eps` and `alpha` never count towards degree.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

pub type Scalar = BigRational;

/// Rational literal `n/d`.
pub fn q(n: i64, d: i64) -> Scalar {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn qi(n: i64) -> Scalar {
    BigRational::from_integer(BigInt::from(n))
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PolyError {
    #[error("limit diverges: surviving negative eps power in term {witness}")]
    LimitDiverges { witness: String },
    #[error("prime {p} too small for degree {degree}")]
    PrimeTooSmall { p: u64, degree: u32 },
    #[error("alpha must be substituted before numeric evaluation")]
    AlphaPresent,
    #[error("denominator not invertible modulo {p}")]
    NotInvertible { p: u64 },
    #[error("variable {0} has no value at the evaluation point")]
    MissingValue(String),
    #[error("syntax error at column {col}: {msg}")]
    Syntax { col: usize, msg: String },
}

// ---------------------------------------------------------------------------
// Variables

/// Variable identifier. A name is one ASCII letter followed by up to three
/// `_`-separated indices (`x`, `x3`, `x1_2_3`); the packed encoding orders
/// variables by letter, then numerically by indices.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(u64);

const IDX_BITS: u32 = 18;
const IDX_MAX: u64 = (1 << IDX_BITS) - 1;

impl Var {
    pub fn new(letter: char, idx: &[u64]) -> Var {
        assert!(letter.is_ascii_alphabetic(), "variable letter must be ASCII");
        assert!(idx.len() <= 3, "at most three indices");
        let mut raw = (letter as u64) << 56;
        for (k, &i) in idx.iter().enumerate() {
            assert!(i <= IDX_MAX, "index too large");
            raw |= i << (38 - 18 * k as u32);
        }
        Var(raw | idx.len() as u64)
    }

    /// `x_i` for the x-family.
    pub fn x(i: u64) -> Var {
        Var::new('x', &[i])
    }

    /// The placeholder variable used by z-leaves.
    pub fn z() -> Var {
        Var::new('z', &[])
    }

    pub fn letter(self) -> char {
        ((self.0 >> 56) as u8) as char
    }

    pub fn indices(self) -> Vec<u64> {
        let n = (self.0 & 3) as usize;
        (0..n)
            .map(|k| (self.0 >> (38 - 18 * k as u32)) & IDX_MAX)
            .collect()
    }

    pub fn parse(name: &str) -> Option<Var> {
        let mut chars = name.chars();
        let letter = chars.next()?;
        if !letter.is_ascii_alphabetic() {
            return None;
        }
        let rest: &str = chars.as_str();
        if rest.is_empty() {
            return Some(Var::new(letter, &[]));
        }
        let mut idx = Vec::new();
        for part in rest.split('_') {
            if part.is_empty() || !part.bytes().all(|b| b.is_ascii_digit()) {
                return None;
            }
            let v: u64 = part.parse().ok()?;
            if v > IDX_MAX {
                return None;
            }
            idx.push(v);
        }
        if idx.len() > 3 {
            return None;
        }
        Some(Var::new(letter, &idx))
    }

    pub fn name(self) -> String {
        let idx = self.indices();
        let mut s = String::new();
        s.push(self.letter());
        let parts: Vec<String> = idx.iter().map(|i| i.to_string()).collect();
        s.push_str(&parts.join("_"));
        s
    }
}

impl fmt::Debug for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())
    }
}

// ---------------------------------------------------------------------------
// Coefficients

/// Element of Q[eps, eps^-1][alpha]: map (eps exponent, alpha exponent) -> rational.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Coeff {
    terms: BTreeMap<(i64, u32), Scalar>,
}

impl Coeff {
    pub fn zero() -> Coeff {
        Coeff::default()
    }

    pub fn one() -> Coeff {
        Coeff::from_scalar(Scalar::one())
    }

    pub fn from_scalar(s: Scalar) -> Coeff {
        Coeff::term(0, 0, s)
    }

    pub fn int(n: i64) -> Coeff {
        Coeff::from_scalar(qi(n))
    }

    pub fn rational(n: i64, d: i64) -> Coeff {
        Coeff::from_scalar(q(n, d))
    }

    pub fn term(eps: i64, alpha: u32, s: Scalar) -> Coeff {
        let mut terms = BTreeMap::new();
        if !s.is_zero() {
            terms.insert((eps, alpha), s);
        }
        Coeff { terms }
    }

    /// `eps^k`.
    pub fn eps(k: i64) -> Coeff {
        Coeff::term(k, 0, Scalar::one())
    }

    /// `alpha^a`.
    pub fn alpha(a: u32) -> Coeff {
        Coeff::term(0, a, Scalar::one())
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1 && self.terms.get(&(0, 0)).is_some_and(|s| s.is_one())
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(i64, u32), &Scalar)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// The rational value if this coefficient is free of eps and alpha.
    pub fn as_scalar(&self) -> Option<Scalar> {
        match self.terms.len() {
            0 => Some(Scalar::zero()),
            1 => self.terms.get(&(0, 0)).cloned(),
            _ => None,
        }
    }

    pub fn has_alpha(&self) -> bool {
        self.terms.keys().any(|&(_, a)| a > 0)
    }

    pub fn has_eps(&self) -> bool {
        self.terms.keys().any(|&(e, _)| e != 0)
    }

    pub fn min_eps(&self) -> Option<i64> {
        self.terms.keys().map(|&(e, _)| e).min()
    }

    pub fn max_abs_eps(&self) -> i64 {
        self.terms.keys().map(|&(e, _)| e.abs()).max().unwrap_or(0)
    }

    pub fn alpha_degree(&self) -> u32 {
        self.terms.keys().map(|&(_, a)| a).max().unwrap_or(0)
    }

    fn insert_add(&mut self, key: (i64, u32), s: Scalar) {
        if s.is_zero() {
            return;
        }
        match self.terms.entry(key) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(s);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += s;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn scale(&self, s: &Scalar) -> Coeff {
        if s.is_zero() {
            return Coeff::zero();
        }
        Coeff {
            terms: self.terms.iter().map(|(k, v)| (*k, v * s)).collect(),
        }
    }

    pub fn pow(&self, n: u32) -> Coeff {
        let mut acc = Coeff::one();
        for _ in 0..n {
            acc = &acc * self;
        }
        acc
    }

    /// eps -> eps^m.
    pub fn subst_eps_power(&self, m: i64) -> Coeff {
        Coeff {
            terms: self
                .terms
                .iter()
                .map(|(&(e, a), v)| ((e * m, a), v.clone()))
                .collect(),
        }
    }

    /// alpha -> c (ring endomorphism).
    pub fn subst_alpha(&self, c: &Coeff) -> Coeff {
        if !self.has_alpha() {
            return self.clone();
        }
        let mut powers: Vec<Coeff> = vec![Coeff::one()];
        let mut out = Coeff::zero();
        for (&(e, a), v) in &self.terms {
            while powers.len() <= a as usize {
                let next = powers.last().unwrap() * c;
                powers.push(next);
            }
            let t = &Coeff::term(e, 0, v.clone()) * &powers[a as usize];
            out += &t;
        }
        out
    }

    /// Drop terms with eps exponent >= k.
    pub fn mod_eps(&self, k: i64) -> Coeff {
        Coeff {
            terms: self
                .terms
                .iter()
                .filter(|(&(e, _), _)| e < k)
                .map(|(k, v)| (*k, v.clone()))
                .collect(),
        }
    }

    /// Value at eps = 0, failing if a negative eps power survives.
    pub fn limit(&self) -> Result<Coeff, PolyError> {
        if let Some((&(e, a), v)) = self.terms.iter().find(|(&(e, _), _)| e < 0) {
            return Err(PolyError::LimitDiverges {
                witness: Coeff::term(e, a, v.clone()).to_string(),
            });
        }
        Ok(Coeff {
            terms: self
                .terms
                .iter()
                .filter(|(&(e, _), _)| e == 0)
                .map(|(k, v)| (*k, v.clone()))
                .collect(),
        })
    }

    /// Rendering without whitespace, for use as a single token.
    pub fn to_compact(&self) -> String {
        self.to_string().replace(' ', "")
    }

    pub fn parse(text: &str) -> Result<Coeff, PolyError> {
        let p = Polynomial::parse(text)?;
        if p.degree().unwrap_or(0) > 0 {
            return Err(PolyError::Syntax {
                col: 1,
                msg: "coefficient may not contain x-variables".into(),
            });
        }
        Ok(p.constant_term())
    }
}

impl<'a> Add<&'a Coeff> for &'a Coeff {
    type Output = Coeff;
    fn add(self, rhs: &Coeff) -> Coeff {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl AddAssign<&Coeff> for Coeff {
    fn add_assign(&mut self, rhs: &Coeff) {
        for (k, v) in &rhs.terms {
            self.insert_add(*k, v.clone());
        }
    }
}

impl<'a> Sub<&'a Coeff> for &'a Coeff {
    type Output = Coeff;
    fn sub(self, rhs: &Coeff) -> Coeff {
        let mut out = self.clone();
        for (k, v) in &rhs.terms {
            out.insert_add(*k, -v.clone());
        }
        out
    }
}

impl<'a> Mul<&'a Coeff> for &'a Coeff {
    type Output = Coeff;
    fn mul(self, rhs: &Coeff) -> Coeff {
        let mut out = Coeff::zero();
        for (&(e1, a1), v1) in &self.terms {
            for (&(e2, a2), v2) in &rhs.terms {
                out.insert_add((e1 + e2, a1 + a2), v1 * v2);
            }
        }
        out
    }
}

impl Neg for &Coeff {
    type Output = Coeff;
    fn neg(self) -> Coeff {
        Coeff {
            terms: self.terms.iter().map(|(k, v)| (*k, -v.clone())).collect(),
        }
    }
}

impl fmt::Debug for Coeff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl fmt::Display for Coeff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", Polynomial::constant(self.clone()))
    }
}

// ---------------------------------------------------------------------------
// Monomials

/// Product of x-variables; sorted by variable, exponents positive.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Debug)]
pub struct Monomial(Vec<(Var, u32)>);

impl Monomial {
    pub fn one() -> Monomial {
        Monomial(Vec::new())
    }

    pub fn var(v: Var) -> Monomial {
        Monomial(vec![(v, 1)])
    }

    pub fn from_pairs(mut pairs: Vec<(Var, u32)>) -> Monomial {
        pairs.retain(|&(_, e)| e > 0);
        pairs.sort_by_key(|&(v, _)| v);
        let mut out: Vec<(Var, u32)> = Vec::with_capacity(pairs.len());
        for (v, e) in pairs {
            match out.last_mut() {
                Some((lv, le)) if *lv == v => *le += e,
                _ => out.push((v, e)),
            }
        }
        Monomial(out)
    }

    pub fn pairs(&self) -> &[(Var, u32)] {
        &self.0
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|&(_, e)| e).sum()
    }

    pub fn exponent(&self, v: Var) -> u32 {
        self.0
            .iter()
            .find(|&&(w, _)| w == v)
            .map(|&(_, e)| e)
            .unwrap_or(0)
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let (a, b) = (&self.0, &other.0);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push(b[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    out.push((a[i].0, a[i].1 + b[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Monomial(out)
    }

    /// Lower the exponent of `v` by one; `None` if `v` is absent.
    pub fn lower(&self, v: Var) -> Option<Monomial> {
        let pos = self.0.iter().position(|&(w, _)| w == v)?;
        let mut out = self.0.clone();
        if out[pos].1 == 1 {
            out.remove(pos);
        } else {
            out[pos].1 -= 1;
        }
        Some(Monomial(out))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|&(v, e)| {
                if e == 1 {
                    v.name()
                } else {
                    format!("{}^{}", v.name(), e)
                }
            })
            .collect();
        write!(f, "{}", parts.join("*"))
    }
}

// ---------------------------------------------------------------------------
// Polynomials

/// Modes of `Polynomial::eps_reduce`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EpsMode {
    Limit,
    ModEps(i64),
    SubstAlpha(Coeff),
    SubstEpsPower(i64),
}

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Polynomial {
    terms: BTreeMap<Monomial, Coeff>,
}

impl Polynomial {
    pub fn zero() -> Polynomial {
        Polynomial::default()
    }

    pub fn one() -> Polynomial {
        Polynomial::constant(Coeff::one())
    }

    pub fn constant(c: Coeff) -> Polynomial {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(Monomial::one(), c);
        }
        Polynomial { terms }
    }

    pub fn var(v: Var) -> Polynomial {
        Polynomial::monomial(Monomial::var(v), Coeff::one())
    }

    /// Shorthand for `x_i`.
    pub fn x(i: u64) -> Polynomial {
        Polynomial::var(Var::x(i))
    }

    pub fn monomial(m: Monomial, c: Coeff) -> Polynomial {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        Polynomial { terms }
    }

    pub fn from_terms(it: impl IntoIterator<Item = (Monomial, Coeff)>) -> Polynomial {
        let mut p = Polynomial::zero();
        for (m, c) in it {
            p.add_term(m, &c);
        }
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Coeff)> {
        self.terms.iter()
    }

    pub fn coeff(&self, m: &Monomial) -> Coeff {
        self.terms.get(m).cloned().unwrap_or_default()
    }

    pub fn constant_term(&self) -> Coeff {
        self.coeff(&Monomial::one())
    }

    pub fn add_term(&mut self, m: Monomial, c: &Coeff) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c.clone());
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    /// Maximal x-degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(Monomial::degree).max()
    }

    pub fn min_degree(&self) -> Option<u32> {
        self.terms.keys().map(Monomial::degree).min()
    }

    pub fn is_homogeneous(&self) -> bool {
        self.degree() == self.min_degree()
    }

    /// Degrees of the nonzero homogeneous components, ascending.
    pub fn degrees(&self) -> Vec<u32> {
        let mut d: Vec<u32> = self.terms.keys().map(Monomial::degree).collect();
        d.sort_unstable();
        d.dedup();
        d
    }

    pub fn vars(&self) -> Vec<Var> {
        let mut v: Vec<Var> = self
            .terms
            .keys()
            .flat_map(|m| m.pairs().iter().map(|&(v, _)| v))
            .collect();
        v.sort();
        v.dedup();
        v
    }

    pub fn has_alpha(&self) -> bool {
        self.terms.values().any(Coeff::has_alpha)
    }

    pub fn min_eps(&self) -> Option<i64> {
        self.terms.values().filter_map(Coeff::min_eps).min()
    }

    pub fn max_abs_eps(&self) -> i64 {
        self.terms.values().map(Coeff::max_abs_eps).max().unwrap_or(0)
    }

    pub fn scale(&self, c: &Coeff) -> Polynomial {
        if c.is_zero() {
            return Polynomial::zero();
        }
        Polynomial::from_terms(self.terms.iter().map(|(m, v)| (m.clone(), v * c)))
    }

    pub fn scale_scalar(&self, s: &Scalar) -> Polynomial {
        self.scale(&Coeff::from_scalar(s.clone()))
    }

    pub fn map_coeffs(&self, f: impl Fn(&Coeff) -> Coeff) -> Polynomial {
        Polynomial::from_terms(self.terms.iter().map(|(m, v)| (m.clone(), f(v))))
    }

    /// Product keeping only monomials of x-degree at most `max_deg`.
    pub fn mul_truncated(&self, other: &Polynomial, max_deg: u32) -> Polynomial {
        let mut out = Polynomial::zero();
        for (m1, c1) in &self.terms {
            let d1 = m1.degree();
            if d1 > max_deg {
                continue;
            }
            for (m2, c2) in &other.terms {
                if d1 + m2.degree() > max_deg {
                    continue;
                }
                out.add_term(m1.mul(m2), &(c1 * c2));
            }
        }
        out
    }

    pub fn truncate_degree(&self, max_deg: u32) -> Polynomial {
        Polynomial {
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| m.degree() <= max_deg)
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        }
    }

    pub fn pow(&self, n: u32) -> Polynomial {
        let mut acc = Polynomial::one();
        for _ in 0..n {
            acc = &acc * self;
        }
        acc
    }

    /// Sum of the terms of x-degree exactly `d`.
    pub fn homog_component(&self, d: u32) -> Polynomial {
        Polynomial {
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| m.degree() == d)
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        }
    }

    /// Odd-degree and even-degree parts.
    pub fn parity_parts(&self) -> (Polynomial, Polynomial) {
        let mut odd = Polynomial::zero();
        let mut even = Polynomial::zero();
        for (m, c) in &self.terms {
            if m.degree() % 2 == 1 {
                odd.terms.insert(m.clone(), c.clone());
            } else {
                even.terms.insert(m.clone(), c.clone());
            }
        }
        (odd, even)
    }

    pub fn partial_derivative(&self, v: Var) -> Polynomial {
        let mut out = Polynomial::zero();
        for (m, c) in &self.terms {
            let e = m.exponent(v);
            if e == 0 {
                continue;
            }
            let lowered = m.lower(v).expect("exponent present");
            out.add_term(lowered, &c.scale(&qi(e as i64)));
        }
        out
    }

    /// Compose with `sigma`; unmapped variables stay fixed.
    pub fn substitute(&self, sigma: &BTreeMap<Var, Polynomial>) -> Polynomial {
        let mut out = Polynomial::zero();
        let mut cache: BTreeMap<(Var, u32), Polynomial> = BTreeMap::new();
        for (m, c) in &self.terms {
            let mut term = Polynomial::constant(c.clone());
            for &(v, e) in m.pairs() {
                let factor = match sigma.get(&v) {
                    None => Polynomial::monomial(Monomial(vec![(v, e)]), Coeff::one()),
                    Some(img) => cache
                        .entry((v, e))
                        .or_insert_with(|| img.pow(e))
                        .clone(),
                };
                term = &term * &factor;
                if term.is_zero() {
                    break;
                }
            }
            out += &term;
        }
        out
    }

    pub fn eps_reduce(&self, mode: &EpsMode) -> Result<Polynomial, PolyError> {
        Ok(match mode {
            EpsMode::Limit => {
                let mut out = Polynomial::zero();
                for (m, c) in &self.terms {
                    let l = c.limit().map_err(|_| PolyError::LimitDiverges {
                        witness: Polynomial::monomial(m.clone(), c.mod_eps(0)).to_string(),
                    })?;
                    out.add_term(m.clone(), &l);
                }
                out
            }
            EpsMode::ModEps(k) => self.map_coeffs(|c| c.mod_eps(*k)),
            EpsMode::SubstAlpha(a) => self.map_coeffs(|c| c.subst_alpha(a)),
            EpsMode::SubstEpsPower(m) => self.map_coeffs(|c| c.subst_eps_power(*m)),
        })
    }

    /// Shorthand for `eps_reduce(&EpsMode::Limit)`.
    pub fn eps_limit(&self) -> Result<Polynomial, PolyError> {
        self.eps_reduce(&EpsMode::Limit)
    }

    pub fn subst_alpha(&self, a: &Coeff) -> Polynomial {
        self.map_coeffs(|c| c.subst_alpha(a))
    }

    pub fn subst_eps_power(&self, m: i64) -> Polynomial {
        self.map_coeffs(|c| c.subst_eps_power(m))
    }

    /// Substitute the x-variables numerically; eps stays symbolic.
    pub fn eval_at(
        &self,
        point: &BTreeMap<Var, FieldElem>,
        field: Field,
    ) -> Result<Laurent, PolyError> {
        if self.has_alpha() {
            return Err(PolyError::AlphaPresent);
        }
        if let Field::Prime(p) = field {
            let d = self.degree().unwrap_or(0);
            if p <= d as u64 {
                return Err(PolyError::PrimeTooSmall { p, degree: d });
            }
        }
        let mut out = Laurent::zero(field);
        for (m, c) in &self.terms {
            let mut val = FieldElem::one(field);
            for &(v, e) in m.pairs() {
                let x = point
                    .get(&v)
                    .ok_or_else(|| PolyError::MissingValue(v.name()))?;
                for _ in 0..e {
                    val = val.mul(x, field);
                }
            }
            for (&(e, _), s) in c.terms() {
                let sv = FieldElem::from_scalar(s, field)?;
                out.add_term(e, sv.mul(&val, field));
            }
        }
        Ok(out)
    }

    pub fn parse(text: &str) -> Result<Polynomial, PolyError> {
        Parser::new(text).parse_poly()
    }

    /// Rendering without whitespace, for use as a single token.
    pub fn to_compact(&self) -> String {
        self.to_string().replace(' ', "")
    }
}

impl<'a> Add<&'a Polynomial> for &'a Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl AddAssign<&Polynomial> for Polynomial {
    fn add_assign(&mut self, rhs: &Polynomial) {
        for (m, c) in &rhs.terms {
            self.add_term(m.clone(), c);
        }
    }
}

impl<'a> Sub<&'a Polynomial> for &'a Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), &-c);
        }
        out
    }
}

impl<'a> Mul<&'a Polynomial> for &'a Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        let mut out = Polynomial::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &rhs.terms {
                out.add_term(m1.mul(m2), &(c1 * c2));
            }
        }
        out
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.map_coeffs(|c| -c)
    }
}

impl fmt::Debug for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

fn fmt_scalar_abs(s: &Scalar) -> String {
    let a = s.abs();
    if a.is_integer() {
        a.numer().to_string()
    } else {
        format!("{}/{}", a.numer(), a.denom())
    }
}

impl fmt::Display for Polynomial {
    /// Terms by descending degree; one printed term per (monomial, eps, alpha).
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut mons: Vec<&Monomial> = self.terms.keys().collect();
        mons.sort_by(|a, b| b.degree().cmp(&a.degree()).then(a.cmp(b)));
        let mut first = true;
        for m in mons {
            for (&(e, a), s) in self.terms[m].terms() {
                let mut factors: Vec<String> = Vec::new();
                if !m.is_one() {
                    factors.push(m.to_string());
                }
                match e {
                    0 => {}
                    1 => factors.push("eps".into()),
                    _ => factors.push(format!("eps^{}", e)),
                }
                match a {
                    0 => {}
                    1 => factors.push("alpha".into()),
                    _ => factors.push(format!("alpha^{}", a)),
                }
                let abs = fmt_scalar_abs(s);
                let body = if factors.is_empty() {
                    abs
                } else if abs == "1" {
                    factors.join("*")
                } else {
                    format!("{}*{}", abs, factors.join("*"))
                };
                let neg = s.is_negative();
                if first {
                    write!(f, "{}{}", if neg { "-" } else { "" }, body)?;
                } else {
                    write!(f, " {} {}", if neg { "-" } else { "+" }, body)?;
                }
                first = false;
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Linear forms

/// Homogeneous degree-1 polynomial: variable -> coefficient.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct LinearForm {
    coeffs: BTreeMap<Var, Coeff>,
}

impl LinearForm {
    pub fn zero() -> LinearForm {
        LinearForm::default()
    }

    pub fn var(v: Var) -> LinearForm {
        LinearForm::term(v, Coeff::one())
    }

    pub fn term(v: Var, c: Coeff) -> LinearForm {
        let mut coeffs = BTreeMap::new();
        if !c.is_zero() {
            coeffs.insert(v, c);
        }
        LinearForm { coeffs }
    }

    pub fn from_terms(it: impl IntoIterator<Item = (Var, Coeff)>) -> LinearForm {
        let mut out = LinearForm::zero();
        for (v, c) in it {
            out.add_term(v, &c);
        }
        out
    }

    pub fn add_term(&mut self, v: Var, c: &Coeff) {
        if c.is_zero() {
            return;
        }
        let e = self.coeffs.entry(v).or_default();
        *e += c;
        if e.is_zero() {
            self.coeffs.remove(&v);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Var, &Coeff)> {
        self.coeffs.iter()
    }

    pub fn coeff(&self, v: Var) -> Coeff {
        self.coeffs.get(&v).cloned().unwrap_or_default()
    }

    pub fn scale(&self, c: &Coeff) -> LinearForm {
        self.map_coeffs(|x| x * c)
    }

    pub fn map_coeffs(&self, f: impl Fn(&Coeff) -> Coeff) -> LinearForm {
        LinearForm::from_terms(self.coeffs.iter().map(|(v, c)| (*v, f(c))))
    }

    pub fn add(&self, other: &LinearForm) -> LinearForm {
        let mut out = self.clone();
        for (v, c) in &other.coeffs {
            out.add_term(*v, c);
        }
        out
    }

    pub fn max_abs_eps(&self) -> i64 {
        self.coeffs.values().map(Coeff::max_abs_eps).max().unwrap_or(0)
    }

    pub fn to_polynomial(&self) -> Polynomial {
        Polynomial::from_terms(
            self.coeffs
                .iter()
                .map(|(v, c)| (Monomial::var(*v), c.clone())),
        )
    }

    /// Split a polynomial of degree at most 1 into (linear part, constant).
    pub fn split_affine(p: &Polynomial) -> Option<(LinearForm, Coeff)> {
        let mut lin = LinearForm::zero();
        let mut c = Coeff::zero();
        for (m, v) in p.terms() {
            match m.pairs() {
                [] => c = v.clone(),
                [(x, 1)] => lin.add_term(*x, v),
                _ => return None,
            }
        }
        Some((lin, c))
    }
}

impl fmt::Debug for LinearForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_polynomial())
    }
}

impl fmt::Display for LinearForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_polynomial())
    }
}

// ---------------------------------------------------------------------------
// Numeric evaluation

/// Default prime for randomized identity testing: 2^61 - 1.
pub const DEFAULT_PRIME: u64 = (1u64 << 61) - 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Field {
    Rational,
    Prime(u64),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FieldElem {
    Q(Scalar),
    Fp(u64),
}

fn pow_mod(mut b: u64, mut e: u64, p: u64) -> u64 {
    let mut acc: u128 = 1;
    let m = p as u128;
    let mut base = (b % p) as u128;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * base % m;
        }
        base = base * base % m;
        e >>= 1;
    }
    b = acc as u64;
    b
}

impl FieldElem {
    pub fn zero(field: Field) -> FieldElem {
        match field {
            Field::Rational => FieldElem::Q(Scalar::zero()),
            Field::Prime(_) => FieldElem::Fp(0),
        }
    }

    pub fn one(field: Field) -> FieldElem {
        match field {
            Field::Rational => FieldElem::Q(Scalar::one()),
            Field::Prime(_) => FieldElem::Fp(1),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            FieldElem::Q(s) => s.is_zero(),
            FieldElem::Fp(v) => *v == 0,
        }
    }

    pub fn from_scalar(s: &Scalar, field: Field) -> Result<FieldElem, PolyError> {
        match field {
            Field::Rational => Ok(FieldElem::Q(s.clone())),
            Field::Prime(p) => {
                let pb = BigInt::from(p);
                let reduce = |x: &BigInt| -> u64 {
                    let r = ((x % &pb) + &pb) % &pb;
                    r.to_u64().expect("reduced below p")
                };
                let n = reduce(s.numer());
                let d = reduce(s.denom());
                if d == 0 {
                    return Err(PolyError::NotInvertible { p });
                }
                let inv = pow_mod(d, p - 2, p);
                Ok(FieldElem::Fp(((n as u128 * inv as u128) % p as u128) as u64))
            }
        }
    }

    pub fn add(&self, o: &FieldElem, field: Field) -> FieldElem {
        match (self, o, field) {
            (FieldElem::Q(a), FieldElem::Q(b), _) => FieldElem::Q(a + b),
            (FieldElem::Fp(a), FieldElem::Fp(b), Field::Prime(p)) => {
                FieldElem::Fp(((*a as u128 + *b as u128) % p as u128) as u64)
            }
            _ => panic!("mixed field elements"),
        }
    }

    pub fn mul(&self, o: &FieldElem, field: Field) -> FieldElem {
        match (self, o, field) {
            (FieldElem::Q(a), FieldElem::Q(b), _) => FieldElem::Q(a * b),
            (FieldElem::Fp(a), FieldElem::Fp(b), Field::Prime(p)) => {
                FieldElem::Fp(((*a as u128 * *b as u128) % p as u128) as u64)
            }
            _ => panic!("mixed field elements"),
        }
    }
}

impl fmt::Display for FieldElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldElem::Q(s) => write!(f, "{}", s),
            FieldElem::Fp(v) => write!(f, "{}", v),
        }
    }
}

/// Univariate Laurent polynomial in eps over a field.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Laurent {
    pub field: Field,
    terms: BTreeMap<i64, FieldElem>,
}

impl Laurent {
    pub fn zero(field: Field) -> Laurent {
        Laurent {
            field,
            terms: BTreeMap::new(),
        }
    }

    fn add_term(&mut self, e: i64, v: FieldElem) {
        let field = self.field;
        let cur = self.terms.remove(&e).unwrap_or_else(|| FieldElem::zero(field));
        let s = cur.add(&v, field);
        if !s.is_zero() {
            self.terms.insert(e, s);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&i64, &FieldElem)> {
        self.terms.iter()
    }

    pub fn constant(field: Field, v: FieldElem) -> Laurent {
        let mut l = Laurent::zero(field);
        l.add_term(0, v);
        l
    }

    pub fn monomial(field: Field, e: i64, v: FieldElem) -> Laurent {
        let mut l = Laurent::zero(field);
        l.add_term(e, v);
        l
    }
}

impl fmt::Display for Laurent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(e, v)| match e {
                0 => v.to_string(),
                _ => format!("{}*eps^{}", v, e),
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

// ---------------------------------------------------------------------------
// Text syntax

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Parser<'a> {
        Parser {
            src: text.as_bytes(),
            pos: 0,
        }
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, PolyError> {
        Err(PolyError::Syntax {
            col: self.pos + 1,
            msg: msg.into(),
        })
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn integer(&mut self) -> Result<BigInt, PolyError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return self.err("expected integer");
        }
        let s = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits");
        Ok(s.parse().expect("digits parse"))
    }

    fn signed_exponent(&mut self) -> Result<i64, PolyError> {
        let neg = if self.peek() == Some(b'-') {
            self.pos += 1;
            true
        } else {
            false
        };
        let v = self
            .integer()?
            .to_i64()
            .ok_or(PolyError::Syntax {
                col: self.pos,
                msg: "exponent too large".into(),
            })?;
        Ok(if neg { -v } else { v })
    }

    fn ident(&mut self) -> String {
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        String::from_utf8_lossy(&self.src[start..self.pos]).into_owned()
    }

    fn parse_poly(&mut self) -> Result<Polynomial, PolyError> {
        let mut out = Polynomial::zero();
        let mut sign = Scalar::one();
        match self.peek() {
            Some(b'-') => {
                sign = -sign;
                self.pos += 1;
            }
            Some(b'+') => self.pos += 1,
            None => return self.err("empty polynomial"),
            _ => {}
        }
        loop {
            let t = self.parse_term()?;
            out += &t.scale_scalar(&sign);
            match self.peek() {
                None => break,
                Some(b'+') => {
                    sign = Scalar::one();
                    self.pos += 1;
                }
                Some(b'-') => {
                    sign = -Scalar::one();
                    self.pos += 1;
                }
                Some(c) => return self.err(format!("unexpected character '{}'", c as char)),
            }
        }
        Ok(out)
    }

    fn parse_term(&mut self) -> Result<Polynomial, PolyError> {
        let mut scalar = Scalar::one();
        let mut eps = 0i64;
        let mut alpha = 0u32;
        let mut pairs: Vec<(Var, u32)> = Vec::new();
        loop {
            match self.peek() {
                Some(c) if c.is_ascii_digit() => {
                    let n = self.integer()?;
                    let mut s = BigRational::from_integer(n);
                    if self.peek() == Some(b'/') {
                        self.pos += 1;
                        let d = self.integer()?;
                        if d.is_zero() {
                            return self.err("zero denominator");
                        }
                        s /= BigRational::from_integer(d);
                    }
                    scalar *= s;
                }
                Some(c) if c.is_ascii_alphabetic() => {
                    let col = self.pos;
                    let name = self.ident();
                    let exp = if self.peek() == Some(b'^') {
                        self.pos += 1;
                        self.signed_exponent()?
                    } else {
                        1
                    };
                    match name.as_str() {
                        "eps" => eps += exp,
                        "alpha" => {
                            if exp < 0 {
                                return self.err("negative alpha exponent");
                            }
                            alpha += exp as u32;
                        }
                        _ => {
                            let v = Var::parse(&name).ok_or(PolyError::Syntax {
                                col: col + 1,
                                msg: format!("bad variable name '{}'", name),
                            })?;
                            if exp < 0 {
                                return self.err("negative variable exponent");
                            }
                            pairs.push((v, exp as u32));
                        }
                    }
                }
                Some(b'(') => {
                    return self.err("parentheses are not part of the polynomial syntax");
                }
                _ => return self.err("expected a factor"),
            }
            if self.peek() == Some(b'*') {
                self.pos += 1;
            } else {
                break;
            }
        }
        Ok(Polynomial::monomial(
            Monomial::from_pairs(pairs),
            Coeff::term(eps, alpha, scalar),
        ))
    }
}
