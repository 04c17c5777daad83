//! Exact, border and randomized equivalence checks, and bound audits.

use std::collections::BTreeMap;
use std::fmt;
use std::time::{Duration, Instant};

use rand::Rng;

use crate::matrixword::{ContinuantReport, MatrixWord, Projection};
use crate::par::Exec;
use crate::poly::{Field, FieldElem, Polynomial, Var, DEFAULT_PRIME};
use crate::random::rng;
use crate::transforms::{Brent3Audit, PassReport};

pub const DEFAULT_TRIALS: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Exact,
    Border,
    Random { trials: usize, field: Field },
}

impl Mode {
    pub fn random_default() -> Mode {
        Mode::Random { trials: DEFAULT_TRIALS, field: Field::Prime(DEFAULT_PRIME) }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Exact => write!(f, "exact"),
            Mode::Border => write!(f, "border"),
            Mode::Random { trials, field: Field::Prime(p) } => write!(f, "random({} trials, prime {})", trials, p),
            Mode::Random { trials, field: Field::Rational } => write!(f, "random({} trials, rational)", trials),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyReport {
    pub mode: Mode,
    pub pass: bool,
    /// First differing term, failing point, or diverging term. Always set on failure.
    pub witness: Option<String>,
    pub elapsed: Duration,
}

impl VerifyReport {
    fn done(mode: Mode, start: Instant, witness: Option<String>) -> VerifyReport {
        VerifyReport { mode, pass: witness.is_none(), witness, elapsed: start.elapsed() }
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.mode, if self.pass { "pass" } else { "FAIL" })?;
        if let Some(w) = &self.witness {
            write!(f, " (witness: {})", w)?;
        }
        write!(f, " [{:.3}s]", self.elapsed.as_secs_f64())
    }
}

/// The first term of `a - b`, if any.
fn first_difference(a: &Polynomial, b: &Polynomial) -> Option<String> {
    let diff = a - b;
    let (m, c) = diff.terms().next()?;
    Some(Polynomial::monomial(m.clone(), c.clone()).to_string())
}

pub fn verify_exact(a: &Polynomial, b: &Polynomial) -> VerifyReport {
    let start = Instant::now();
    VerifyReport::done(Mode::Exact, start, first_difference(a, b))
}

/// What a border check expands.
#[derive(Clone, Copy, Debug)]
pub enum BorderInput<'a> {
    Word(&'a MatrixWord),
    Projection(&'a Projection),
}

#[derive(Clone, Copy, Debug, Default)]
pub struct BorderOpts {
    pub exec: Exec,
    /// Keep only the homogeneous component of this degree before the limit.
    pub degree: Option<u32>,
    /// Drop eps powers `>= K` from the expanded value before the limit.
    pub mod_eps: Option<i64>,
}

/// Expand, scale, apply the functional, optionally restrict to one degree,
/// then take the eps-limit and compare with `target`.
pub fn verify_border(input: BorderInput<'_>, target: &Polynomial, opts: BorderOpts) -> VerifyReport {
    let start = Instant::now();
    let raw = match input {
        BorderInput::Word(w) => {
            let m = w.expand_with(crate::matrixword::ExpandOpts { exec: opts.exec, max_deg: opts.degree });
            match w.value_of(&m) {
                Ok(v) => v,
                Err(e) => return VerifyReport::done(Mode::Border, start, Some(e.to_string())),
            }
        }
        BorderInput::Projection(p) => p.raw_value(),
    };
    let mut v = match opts.degree {
        Some(d) => raw.homog_component(d),
        None => raw,
    };
    if let Some(k) = opts.mod_eps {
        v = v.map_coeffs(|c| c.mod_eps(k));
    }
    let witness = match v.eps_limit() {
        Ok(lim) => first_difference(&lim, target),
        Err(e) => Some(e.to_string()),
    };
    VerifyReport::done(Mode::Border, start, witness)
}

/// Schwartz-Zippel test of `a = b` at `trials` seeded random points.
pub fn verify_random(a: &Polynomial, b: &Polynomial, trials: usize, field: Field, seed: u64) -> VerifyReport {
    let start = Instant::now();
    let mode = Mode::Random { trials, field };
    let mut vars: Vec<Var> = a.vars();
    vars.extend(b.vars());
    vars.sort();
    vars.dedup();
    let mut r = rng(seed);
    for _ in 0..trials {
        let point: BTreeMap<Var, FieldElem> = vars
            .iter()
            .map(|&v| {
                let e = match field {
                    Field::Prime(p) => FieldElem::Fp(r.gen_range(0..p)),
                    Field::Rational => FieldElem::Q(crate::poly::qi(r.gen_range(-1000..=1000))),
                };
                (v, e)
            })
            .collect();
        let (va, vb) = match (a.eval_at(&point, field), b.eval_at(&point, field)) {
            (Ok(x), Ok(y)) => (x, y),
            (Err(e), _) | (_, Err(e)) => return VerifyReport::done(mode, start, Some(e.to_string())),
        };
        if va != vb {
            let pt: Vec<String> = point.iter().map(|(v, e)| format!("{}={}", v, e)).collect();
            let w = format!("at {{{}}}: {} vs {}", pt.join(", "), va, vb);
            return VerifyReport::done(mode, start, Some(w));
        }
    }
    VerifyReport::done(mode, start, None)
}

/// Dispatch on `mode` for two explicit polynomials.
pub fn verify(a: &Polynomial, b: &Polynomial, mode: Mode, seed: u64) -> VerifyReport {
    match mode {
        Mode::Exact => verify_exact(a, b),
        Mode::Random { trials, field } => verify_random(a, b, trials, field, seed),
        Mode::Border => {
            let start = Instant::now();
            let witness = match a.eps_limit() {
                Ok(lim) => first_difference(&lim, b),
                Err(e) => Some(e.to_string()),
            };
            VerifyReport::done(Mode::Border, start, witness)
        }
    }
}

/// Metrics a bound can be audited against.
#[derive(Clone, Debug)]
pub enum Metric<'a> {
    /// Input size and output size/depth of the circuit homogenization.
    IhlCircuit { input_size: usize, size: usize, depth: usize },
    /// Formula depth and word length.
    Offdiag3 { depth: usize, r: usize },
    Brent3(&'a Brent3Audit),
    Continuant(&'a ContinuantReport),
    /// Depth, size and degree of a depth-reduced circuit.
    Vsbr { size: usize, degree: u32, depth: usize },
    Pass(&'a PassReport),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Audit {
    pub pass: bool,
    /// The bound formula with its numbers filled in.
    pub bound: String,
    /// Reported but never failed on.
    pub informational: bool,
}

impl fmt::Display for Audit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = match (self.informational, self.pass) {
            (true, _) => "info",
            (false, true) => "ok",
            (false, false) => "VIOLATED",
        };
        write!(f, "{} [{}]", verdict, self.bound)
    }
}

pub fn audit_bounds(m: &Metric<'_>) -> Audit {
    let hard = |pass: bool, bound: String| Audit { pass, bound, informational: false };
    match m {
        Metric::IhlCircuit { input_size, size, depth } => hard(
            *size <= 6 * input_size && *depth <= 3 * input_size,
            format!("size {} <= 6s = {}, depth {} <= 3s = {}", size, 6 * input_size, depth, 3 * input_size),
        ),
        Metric::Offdiag3 { depth, r } => {
            let lim = 4u128.saturating_pow(*depth as u32);
            hard(*r as u128 <= lim, format!("r = {} <= 4^{} = {}", r, depth, lim))
        }
        Metric::Brent3(a) => hard(
            a.all_ok(),
            format!(
                "per step: size <= 5*size(2s/3) + 3, depth <= depth(2s/3) + 2; {} steps, {} violations",
                a.steps.len(),
                a.violations()
            ),
        ),
        Metric::Continuant(r) => {
            let rule = if r.bound == 3u128.saturating_pow(r.depth as u32) {
                "3^depth"
            } else {
                "2*3^depth + 2 summed over variable blocks"
            };
            hard(r.within_bound(), format!("unpadded r = {} <= {} ({}, depth {})", r.unpadded(), r.bound, rule, r.depth))
        }
        Metric::Vsbr { size, degree, depth } => {
            let denom = (*size.max(&2) as f64).log2() * (f64::from(*degree.max(&2))).log2();
            Audit {
                pass: true,
                bound: format!("depth {} = {:.3} * log2(s) * log2(d)", depth, *depth as f64 / denom),
                informational: true,
            }
        }
        Metric::Pass(p) => hard(p.satisfied, p.bound.clone()),
    }
}

/// Run independent checks, possibly in parallel; results keep job order.
pub fn run_jobs<J, F>(exec: Exec, jobs: &[J], f: F) -> Vec<VerifyReport>
where
    J: Sync,
    F: Fn(&J) -> VerifyReport + Sync + Send,
{
    exec.map(jobs, f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Circuit;
    use crate::matrixword::compile_trace3;
    use crate::poly::Coeff;

    fn p(s: &str) -> Polynomial {
        Polynomial::parse(s).unwrap()
    }

    #[test]
    fn exact_examples() {
        assert!(verify_exact(&p("x1 + x2").pow(2), &p("x1^2 + 2*x1*x2 + x2^2")).pass);
        let r = verify_exact(&p("x1*x2"), &p("x1*x2 + eps*x1"));
        assert!(!r.pass);
        assert_eq!(r.witness.as_deref(), Some("-x1*eps"));
        assert!(verify_exact(&Polynomial::zero(), &p("0")).pass);
    }

    #[test]
    fn border_examples() {
        let c = Circuit::parse("shape formula\ngate a = input x1\ngate b = input x2\ngate m = mul a b\noutput m").unwrap();
        let mut w = compile_trace3(&c).unwrap();
        let target = p("x1*x2");
        assert!(verify_border(BorderInput::Word(&w), &target, BorderOpts::default()).pass);
        w.scalar = Coeff::eps(-3);
        let bad = verify_border(BorderInput::Word(&w), &target, BorderOpts::default());
        assert!(!bad.pass);
        assert!(bad.witness.unwrap().contains("limit diverges"));
    }

    #[test]
    fn random_mode() {
        let a = p("x1 + x2").pow(3);
        let b = p("x1^3 + 3*x1^2*x2 + 3*x1*x2^2 + x2^3");
        assert!(verify_random(&a, &b, 20, Field::Prime(DEFAULT_PRIME), 1).pass);
        assert!(verify_random(&a, &b, 5, Field::Rational, 1).pass);
        let r = verify_random(&a, &p("x1^3"), 20, Field::Prime(DEFAULT_PRIME), 1);
        assert!(!r.pass && r.witness.is_some());
    }

    #[test]
    fn audits() {
        assert!(audit_bounds(&Metric::IhlCircuit { input_size: 10, size: 58, depth: 12 }).pass);
        assert!(!audit_bounds(&Metric::Offdiag3 { depth: 3, r: 70 }).pass);
        let v = audit_bounds(&Metric::Vsbr { size: 40, degree: 5, depth: 12 });
        assert!(v.informational && v.pass);
    }
}
