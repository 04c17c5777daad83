//! Matrix words and homogeneous linear projections onto families.
//!
//! A [`MatrixWord`] stands for `scalar * L((id + A_1)(id + A_2)...(id + A_r) - id)`.
//! The compilers in [`kumar`] produce 3x3 words from arity-2 formulas; the
//! ones in [`continuant`] produce projections onto `C_{r,d}` from formulas in
//! the sum/negated-cube basis.

pub mod continuant;
pub mod kumar;

use std::fmt;

use thiserror::Error;

use crate::circuit::CircuitError;
use crate::families::{c_at, identity, mat_mul, nce_at, zero_matrix, Functional, Matrix};
use crate::par::Exec;
use crate::poly::{Coeff, LinearForm, Polynomial, PolyError};
use crate::transforms::TransformError;

pub use continuant::{compile_continuant_even, compile_continuant_odd, ContinuantReport};
pub use kumar::{compile_offdiag3, compile_trace3};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CompileError {
    #[error("not input-homogeneous-linear: {0}")]
    NotIhl(String),
    #[error("input must be a formula")]
    NotFormula,
    #[error("unsupported gate: {0}")]
    Basis(String),
    #[error("degree {0} is not odd")]
    NotOddDegree(u32),
    #[error("degree {0} is not even")]
    NotEvenDegree(u32),
    #[error("no even part of degree {0}")]
    MissingPart(u32),
    #[error("precision exhausted: k would exceed the cap {cap}")]
    PrecisionExhausted { cap: i64 },
    #[error("factor {factor} has a nonzero diagonal entry")]
    DiagonalNonzero { factor: usize },
    #[error("invalid target: {0}")]
    BadTarget(String),
    #[error("family has {have} factor slots but the word has {need} factors")]
    TooFewSlots { have: usize, need: usize },
    #[error("formula value is not homogeneous of degree {0}")]
    NotHomogeneous(u32),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Transform(#[from] TransformError),
}

/// Cap on the adaptive precision exponent, from `HOMLIN_MAX_K`.
pub fn max_k() -> i64 {
    std::env::var("HOMLIN_MAX_K").ok().and_then(|s| s.trim().parse().ok()).unwrap_or(1 << 16)
}

/// Sparse non-identity part `A` of a factor `id + A`; positions are 0-based.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Factor {
    pub entries: Vec<(usize, usize, LinearForm)>,
}

impl Factor {
    pub fn identity() -> Factor {
        Factor::default()
    }

    pub fn single(r: usize, c: usize, form: LinearForm) -> Factor {
        let mut f = Factor::default();
        f.set(r, c, form);
        f
    }

    pub fn set(&mut self, r: usize, c: usize, form: LinearForm) {
        self.entries.retain(|(a, b, _)| (*a, *b) != (r, c));
        if !form.is_zero() {
            self.entries.push((r, c, form));
            self.entries.sort_by_key(|(a, b, _)| (*a, *b));
        }
    }

    pub fn get(&self, r: usize, c: usize) -> LinearForm {
        self.entries.iter().find(|(a, b, _)| (*a, *b) == (r, c)).map(|e| e.2.clone()).unwrap_or_default()
    }

    pub fn map_forms(&self, f: impl Fn(&LinearForm) -> LinearForm) -> Factor {
        let mut out = Factor::default();
        for (r, c, l) in &self.entries {
            out.set(*r, *c, f(l));
        }
        out
    }

    pub fn transpose(&self) -> Factor {
        let mut out = Factor::default();
        for (r, c, l) in &self.entries {
            out.set(*c, *r, l.clone());
        }
        out
    }

    pub fn to_matrix(&self, dim: usize) -> Matrix {
        let mut m = identity(dim);
        for (r, c, l) in &self.entries {
            m[*r][*c] += &l.to_polynomial();
        }
        m
    }

    pub fn max_abs_eps(&self) -> i64 {
        self.entries.iter().map(|e| e.2.max_abs_eps()).max().unwrap_or(0)
    }
}

/// The functional read off the expanded product.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Target {
    /// 0-based position.
    Entry(usize, usize),
    Trace,
    Functional(Functional),
}

impl Target {
    pub fn apply(&self, m: &Matrix) -> Result<Polynomial, CompileError> {
        let dim = m.len();
        match self {
            Target::Entry(i, j) if *i < dim && *j < dim => Ok(m[*i][*j].clone()),
            Target::Entry(..) => Err(CompileError::BadTarget(format!("{} outside a {}x{} matrix", self, dim, dim))),
            Target::Trace => {
                let mut t = Polynomial::zero();
                for (i, row) in m.iter().enumerate() {
                    t += &row[i];
                }
                Ok(t)
            }
            Target::Functional(l) if dim == 3 => Ok(l.apply(m)),
            Target::Functional(_) => Err(CompileError::BadTarget("L(...) needs a 3x3 word".into())),
        }
    }

    /// The same target as a functional on 3x3 matrices.
    pub fn functional(&self) -> Functional {
        match self {
            Target::Entry(i, j) => Functional::entry(i + 1, j + 1),
            Target::Trace => Functional::trace(),
            Target::Functional(l) => l.clone(),
        }
    }

    pub fn parse(s: &str) -> Option<Target> {
        let s = s.trim();
        if s == "trace" {
            return Some(Target::Trace);
        }
        if let Some(inner) = s.strip_prefix("entry(").and_then(|r| r.strip_suffix(')')) {
            let (i, j) = inner.split_once(',')?;
            let (i, j): (usize, usize) = (i.trim().parse().ok()?, j.trim().parse().ok()?);
            return (i >= 1 && j >= 1).then_some(Target::Entry(i - 1, j - 1));
        }
        Functional::parse(s).map(Target::Functional)
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::Entry(i, j) => write!(f, "entry({},{})", i + 1, j + 1),
            Target::Trace => write!(f, "trace"),
            Target::Functional(l) => write!(f, "{}", l),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatrixWord {
    pub dim: usize,
    pub factors: Vec<Factor>,
    pub scalar: Coeff,
    pub target: Target,
}

/// Options for [`MatrixWord::expand_with`].
#[derive(Clone, Copy, Debug, Default)]
pub struct ExpandOpts {
    pub exec: Exec,
    /// Drop monomials of x-degree above this bound while multiplying.
    pub max_deg: Option<u32>,
}

impl MatrixWord {
    pub fn new(dim: usize, factors: Vec<Factor>, target: Target) -> MatrixWord {
        MatrixWord { dim, factors, scalar: Coeff::one(), target }
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    /// The exact product of the factors.
    pub fn expand(&self) -> Matrix {
        self.expand_with(ExpandOpts::default())
    }

    pub fn expand_with(&self, opts: ExpandOpts) -> Matrix {
        let mats: Vec<Matrix> = opts.exec.map(&self.factors, |f| f.to_matrix(self.dim));
        let block = (mats.len() / 32).max(16);
        opts.exec.product(&mats, identity(self.dim), block, |a, b| mat_mul(a, b, opts.max_deg))
    }

    /// `product - id`.
    pub fn expand_minus_id(&self) -> Matrix {
        minus_id(self.expand())
    }

    /// `scalar * L(product - id)`.
    pub fn value(&self) -> Result<Polynomial, CompileError> {
        self.value_of(&self.expand())
    }

    /// `scalar * L(m - id)` for an already expanded product `m`.
    pub fn value_of(&self, m: &Matrix) -> Result<Polynomial, CompileError> {
        let mut d = m.clone();
        for (i, row) in d.iter_mut().enumerate() {
            row[i] = &row[i] - &Polynomial::one();
        }
        Ok(self.target.apply(&d)?.scale(&self.scalar))
    }

    /// Reverse the word and transpose every factor.
    pub fn transpose(&self) -> MatrixWord {
        let target = match &self.target {
            Target::Entry(i, j) => Target::Entry(*j, *i),
            other => other.clone(),
        };
        MatrixWord {
            dim: self.dim,
            factors: self.factors.iter().rev().map(Factor::transpose).collect(),
            scalar: self.scalar.clone(),
            target,
        }
    }

    pub fn max_abs_eps(&self) -> i64 {
        self.factors.iter().map(Factor::max_abs_eps).max().unwrap_or(0).max(self.scalar.max_abs_eps())
    }

    /// For 2x2 words: every factor is upper or lower triangular and the two
    /// shapes alternate, starting with upper.
    pub fn alternates(&self) -> bool {
        self.dim == 2
            && self.factors.iter().enumerate().all(|(i, f)| {
                let allowed = if i % 2 == 0 { (0, 1) } else { (1, 0) };
                f.entries.iter().all(|(r, c, _)| (*r, *c) == allowed)
            })
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("dim {}\n", self.dim);
        for f in &self.factors {
            let parts: Vec<String> =
                f.entries.iter().map(|(r, c, l)| format!("({},{})={}", r + 1, c + 1, l)).collect();
            if parts.is_empty() {
                s.push_str("factor:\n");
            } else {
                s.push_str(&format!("factor: {}\n", parts.join("; ")));
            }
        }
        s.push_str(&format!("scalar: {}\n", self.scalar));
        s.push_str(&format!("target: {}\n", self.target));
        s
    }

    pub fn parse(text: &str) -> Result<MatrixWord, CircuitError> {
        let err = |line: usize, msg: String| CircuitError::Syntax { line, col: 1, msg };
        let mut dim = None;
        let mut factors = Vec::new();
        let mut scalar = Coeff::one();
        let mut target = None;
        for (n, raw) in text.lines().enumerate() {
            let line_no = n + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("dim") {
                let d: usize = rest.trim().parse().map_err(|_| err(line_no, "bad dimension".into()))?;
                if !(2..=3).contains(&d) {
                    return Err(err(line_no, "dimension must be 2 or 3".into()));
                }
                dim = Some(d);
            } else if let Some(rest) = line.strip_prefix("factor:") {
                let d = dim.ok_or_else(|| err(line_no, "factor before dim".into()))?;
                factors.push(parse_factor(rest, d).map_err(|m| err(line_no, m))?);
            } else if let Some(rest) = line.strip_prefix("scalar:") {
                scalar = Coeff::parse(rest.trim()).map_err(|e| err(line_no, e.to_string()))?;
            } else if let Some(rest) = line.strip_prefix("target:") {
                target = Some(Target::parse(rest).ok_or_else(|| err(line_no, format!("bad target '{}'", rest.trim())))?);
            } else {
                return Err(err(line_no, format!("unexpected line '{}'", line)));
            }
        }
        let dim = dim.ok_or_else(|| err(1, "missing dim".into()))?;
        let target = target.unwrap_or(Target::Entry(0, dim - 1));
        Ok(MatrixWord { dim, factors, scalar, target })
    }
}

fn parse_factor(s: &str, dim: usize) -> Result<Factor, String> {
    let mut f = Factor::default();
    for part in s.split(';').map(str::trim).filter(|p| !p.is_empty()) {
        let (pos, form) = part.split_once('=').ok_or_else(|| format!("expected (r,c)=form in '{}'", part))?;
        let pos = pos.trim().strip_prefix('(').and_then(|p| p.strip_suffix(')')).ok_or("bad position")?;
        let (r, c) = pos.split_once(',').ok_or("bad position")?;
        let r: usize = r.trim().parse().map_err(|_| "bad row")?;
        let c: usize = c.trim().parse().map_err(|_| "bad column")?;
        if r == 0 || c == 0 || r > dim || c > dim {
            return Err(format!("position ({},{}) outside the matrix", r, c));
        }
        let p = Polynomial::parse(form.trim()).map_err(|e| e.to_string())?;
        match LinearForm::split_affine(&p) {
            Some((l, k)) if k.is_zero() => f.set(r - 1, c - 1, l),
            _ => return Err(format!("'{}' is not a homogeneous linear form", form.trim())),
        }
    }
    Ok(f)
}

pub fn minus_id(mut m: Matrix) -> Matrix {
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = &row[i] - &Polynomial::one();
    }
    m
}

/// `p * E_{i,j}` as a `dim x dim` matrix.
pub fn elementary(dim: usize, i: usize, j: usize, p: Polynomial) -> Matrix {
    let mut m = zero_matrix(dim);
    m[i][j] = p;
    m
}

/// Entrywise eps-limit.
pub fn matrix_limit(m: &Matrix) -> Result<Matrix, PolyError> {
    m.iter().map(|row| row.iter().map(Polynomial::eps_limit).collect()).collect()
}

pub fn scale_matrix(m: &Matrix, c: &Coeff) -> Matrix {
    m.iter().map(|row| row.iter().map(|p| p.scale(c)).collect()).collect()
}

/// Which family a projection substitutes into.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ProjectionFamily {
    /// `L(nce_d(A_1..A_n))` with zero-diagonal 3x3 factors, six slots each in
    /// the order (1,2),(1,3),(2,1),(2,3),(3,1),(3,2).
    NceL { functional: Functional, n: usize },
    /// `C_{n,d}`, one slot per variable.
    C { n: usize },
}

/// Slot order for one zero-diagonal factor.
pub const OFFDIAG_SLOTS: [(usize, usize); 6] = [(0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1)];

impl ProjectionFamily {
    pub fn slots(&self) -> usize {
        match self {
            ProjectionFamily::NceL { n, .. } => 6 * n,
            ProjectionFamily::C { n } => *n,
        }
    }
}

/// `scalar * family_d(forms)`, with an eps-limit taken when `border` is set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Projection {
    pub family: ProjectionFamily,
    pub degree: u32,
    pub forms: Vec<LinearForm>,
    pub scalar: Coeff,
    pub border: bool,
}

impl Projection {
    /// `family_d(forms)` before scaling and limits.
    pub fn family_value(&self) -> Polynomial {
        match &self.family {
            ProjectionFamily::C { .. } => {
                let polys: Vec<Polynomial> = self.forms.iter().map(LinearForm::to_polynomial).collect();
                c_at(&polys, self.degree)
            }
            ProjectionFamily::NceL { functional, .. } => {
                if self.degree == 0 {
                    return Polynomial::one();
                }
                let mats: Vec<Matrix> = self
                    .forms
                    .chunks(6)
                    .map(|ch| {
                        let mut m = zero_matrix(3);
                        for (&(r, c), l) in OFFDIAG_SLOTS.iter().zip(ch) {
                            m[r][c] = l.to_polynomial();
                        }
                        m
                    })
                    .collect();
                functional.apply(&nce_at(&mats, self.degree))
            }
        }
    }

    /// `scalar * family_d(forms)`, not yet reduced.
    pub fn raw_value(&self) -> Polynomial {
        self.family_value().scale(&self.scalar)
    }

    /// The projected polynomial; the eps-limit is taken for border projections.
    pub fn value(&self) -> Result<Polynomial, PolyError> {
        let v = self.raw_value();
        if self.border {
            v.eps_limit()
        } else {
            Ok(v)
        }
    }

    pub fn is_consistent(&self) -> bool {
        self.forms.len() == self.family.slots()
    }

    pub fn to_text(&self) -> String {
        let fam = match &self.family {
            ProjectionFamily::C { n } => format!("C {}", n),
            ProjectionFamily::NceL { functional, n } => format!("nceL {} {}", functional, n),
        };
        let mut s = format!("projection {}\ndegree {}\nscalar {}\nborder {}\n", fam, self.degree, self.scalar, self.border);
        for (i, l) in self.forms.iter().enumerate() {
            s.push_str(&format!("form {}: {}\n", i + 1, l));
        }
        s
    }

    pub fn parse(text: &str) -> Result<Projection, CircuitError> {
        let err = |line: usize, msg: String| CircuitError::Syntax { line, col: 1, msg };
        let mut family = None;
        let mut degree = None;
        let mut scalar = Coeff::one();
        let mut border = false;
        let mut forms: Vec<LinearForm> = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let ln = n + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
            let rest = rest.trim();
            match key {
                "projection" => {
                    let parts: Vec<&str> = rest.split_whitespace().collect();
                    family = Some(match parts[..] {
                        ["C", n] => ProjectionFamily::C { n: n.parse().map_err(|_| err(ln, "bad n".into()))? },
                        ["nceL", l, n] => ProjectionFamily::NceL {
                            functional: Functional::parse(l).ok_or_else(|| err(ln, "bad functional".into()))?,
                            n: n.parse().map_err(|_| err(ln, "bad n".into()))?,
                        },
                        _ => return Err(err(ln, format!("unknown family '{}'", rest))),
                    });
                }
                "degree" => degree = Some(rest.parse().map_err(|_| err(ln, "bad degree".into()))?),
                "scalar" => scalar = Coeff::parse(rest).map_err(|e| err(ln, e.to_string()))?,
                "border" => border = rest == "true",
                "form" => {
                    let (idx, body) = rest.split_once(':').ok_or_else(|| err(ln, "expected 'form i: ...'".into()))?;
                    let idx: usize = idx.trim().parse().map_err(|_| err(ln, "bad form index".into()))?;
                    if idx != forms.len() + 1 {
                        return Err(err(ln, format!("expected form {}", forms.len() + 1)));
                    }
                    let p = Polynomial::parse(body.trim()).map_err(|e| err(ln, e.to_string()))?;
                    match LinearForm::split_affine(&p) {
                        Some((l, k)) if k.is_zero() => forms.push(l),
                        _ => return Err(err(ln, "not a homogeneous linear form".into())),
                    }
                }
                _ => return Err(err(ln, format!("unexpected line '{}'", line))),
            }
        }
        let family = family.ok_or_else(|| err(1, "missing 'projection' line".into()))?;
        let degree = degree.ok_or_else(|| err(1, "missing degree".into()))?;
        let p = Projection { family, degree, forms, scalar, border };
        if !p.is_consistent() {
            return Err(err(1, format!("{} forms for {} slots", p.forms.len(), p.family.slots())));
        }
        Ok(p)
    }
}

/// Read a zero-diagonal 3x3 word as a projection onto `nceL` with `n >= r`
/// factors; unused slots get zero forms and the scalar stays separate.
pub fn word_to_projection(w: &MatrixWord, n: usize, d: u32) -> Result<Projection, CompileError> {
    if w.dim != 3 {
        return Err(CompileError::BadTarget("projection onto nceL needs a 3x3 word".into()));
    }
    if n < w.len() {
        return Err(CompileError::TooFewSlots { have: n, need: w.len() });
    }
    let mut forms = Vec::with_capacity(6 * n);
    for (i, f) in w.factors.iter().enumerate() {
        if f.entries.iter().any(|(r, c, _)| r == c) {
            return Err(CompileError::DiagonalNonzero { factor: i });
        }
        forms.extend(OFFDIAG_SLOTS.iter().map(|&(r, c)| f.get(r, c)));
    }
    forms.resize(6 * n, LinearForm::zero());
    let border = w.scalar.has_eps() || forms.iter().any(|l| l.max_abs_eps() > 0);
    Ok(Projection {
        family: ProjectionFamily::NceL { functional: w.target.functional(), n },
        degree: d,
        forms,
        scalar: w.scalar.clone(),
        border,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::Var;

    fn lf(s: &str) -> LinearForm {
        LinearForm::split_affine(&Polynomial::parse(s).unwrap()).unwrap().0
    }

    fn p(s: &str) -> Polynomial {
        Polynomial::parse(s).unwrap()
    }

    #[test]
    fn empty_word_is_identity() {
        let w = MatrixWord::new(3, vec![], Target::Trace);
        assert_eq!(w.expand(), identity(3));
    }

    #[test]
    fn two_factor_hand_product() {
        let w = MatrixWord::new(
            2,
            vec![Factor::single(0, 1, lf("x1")), Factor::single(1, 0, lf("x2"))],
            Target::Entry(0, 0),
        );
        let m = w.expand();
        assert_eq!(m[0][0], p("1 + x1*x2"));
        assert_eq!(m[0][1], p("x1"));
        assert_eq!(m[1][0], p("x2"));
        assert_eq!(m[1][1], p("1"));
        assert!(w.alternates());
    }

    #[test]
    fn commutator_word() {
        let (f, g) = (lf("x1"), lf("x2"));
        let neg = |l: &LinearForm| l.scale(&Coeff::int(-1));
        let w = MatrixWord::new(
            3,
            vec![
                Factor::single(0, 1, f.clone()),
                Factor::single(1, 2, g.clone()),
                Factor::single(0, 1, neg(&f)),
                Factor::single(1, 2, neg(&g)),
            ],
            Target::Entry(0, 2),
        );
        assert_eq!(w.expand_minus_id(), elementary(3, 0, 2, p("x1*x2")));
        assert_eq!(w.value().unwrap(), p("x1*x2"));
    }

    #[test]
    fn parallel_matches_sequential() {
        let factors: Vec<Factor> = (0..90)
            .map(|i| Factor::single(i % 3, (i + 1) % 3, LinearForm::var(Var::x(i as u64 % 5 + 1))))
            .collect();
        let w = MatrixWord::new(3, factors, Target::Trace);
        let opts = |exec| ExpandOpts { exec, max_deg: Some(4) };
        assert_eq!(w.expand_with(opts(Exec::Parallel)), w.expand_with(opts(Exec::Sequential)));
    }

    #[test]
    fn text_round_trip() {
        let mut f = Factor::single(0, 2, lf("2*x1 - eps*x3"));
        f.set(1, 0, lf("x2"));
        let mut w = MatrixWord::new(3, vec![f, Factor::identity()], Target::Entry(0, 2));
        w.scalar = Coeff::eps(-2);
        let back = MatrixWord::parse(&w.to_text()).unwrap();
        assert_eq!(back, w);
        assert!(MatrixWord::parse("dim 3\nfactor: (1,4)=x1\n").is_err());
        assert!(MatrixWord::parse("dim 3\nfactor: (1,2)=x1*x2\n").is_err());
    }

    #[test]
    fn transpose_reverses_product() {
        let w = MatrixWord::new(
            3,
            vec![Factor::single(0, 1, lf("x1")), Factor::single(1, 2, lf("x2")), Factor::single(2, 0, lf("x3"))],
            Target::Trace,
        );
        let m = w.expand();
        let t = w.transpose().expand();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(m[i][j], t[j][i]);
            }
        }
    }

    #[test]
    fn projection_text_round_trip() {
        let pr = Projection {
            family: ProjectionFamily::C { n: 3 },
            degree: 1,
            forms: vec![lf("x1"), LinearForm::zero(), lf("eps^-1*x2")],
            scalar: Coeff::one(),
            border: true,
        };
        assert_eq!(Projection::parse(&pr.to_text()).unwrap(), pr);
        assert_eq!(pr.raw_value(), p("x1 + eps^-1*x2"));
    }
}
