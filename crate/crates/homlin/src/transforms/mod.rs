//! Source-to-source passes over formulas and circuits.
//!
//! Each pass has a tree-level entry point (on [`Formula`]) and a circuit-level
//! wrapper that checks preconditions. [`run_pass`] dispatches by name and
//! attaches a [`PassReport`] with the pass's size/depth bound.

mod brent;
mod brent3;
mod derivative;
mod ihl;
mod negcube;
mod parity;
mod rescale;
mod vf;
mod vsbr;

use std::fmt;

use thiserror::Error;

use crate::circuit::{Basis, Circuit, CircuitError, Formula, Gate, Predicate, Shape};
use crate::poly::{Coeff, Polynomial, Var};

pub use brent::{brent, brent_tree};
pub use brent3::{brent3, brent3_tree, Brent3Audit, Brent3Step};
pub use derivative::{derivative, derivative_tree};
pub use ihl::{ihl_circuit, ihl_formula, ihl_tree};
pub use negcube::{add_negcube, add_negcube_tree};
pub use parity::{parity, parity_tree, ParitySplit};
pub use rescale::{rescale, rescale_tree};
pub use vf::{extract_components, vf_to_v3p, GradedArity3Repr};
pub use vsbr::{colon_poly, frontier, usum_holds, uvsum_holds, vsbr3, VsbrOutput};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TransformError {
    #[error("rescaling through a negcube gate would need a cube root")]
    NeedsRootExtraction,
    #[error("{pass}: {msg}")]
    Precondition { pass: &'static str, msg: String },
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

fn precondition<T>(pass: &'static str, msg: impl Into<String>) -> Result<T, TransformError> {
    Err(TransformError::Precondition { pass, msg: msg.into() })
}

fn require_formula(c: &Circuit, pass: &'static str) -> Result<(), TransformError> {
    if c.shape != Shape::Formula {
        return precondition(pass, "input must be a formula");
    }
    Ok(())
}

fn require(c: &Circuit, pred: Predicate, pass: &'static str) -> Result<(), TransformError> {
    c.validate(pred)
        .or_else(|v| precondition(pass, format!("{:?} check failed at {}", pred, v)))
}

fn require_no(c: &Circuit, pass: &'static str, bad: fn(&Gate) -> bool, what: &str) -> Result<(), TransformError> {
    let reach = c.reachable();
    match c.gates.iter().enumerate().find(|(i, g)| reach[*i] && bad(g)) {
        Some((i, _)) => precondition(pass, format!("gate g{} is {}", i, what)),
        None => Ok(()),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Measure {
    pub size: usize,
    pub depth: usize,
}

impl Measure {
    pub fn of(c: &Circuit) -> Measure {
        Measure { size: c.size(), depth: c.depth() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PassReport {
    pub pass: String,
    pub input: Measure,
    pub output: Measure,
    /// Human-readable bound, e.g. `size <= 6*s`.
    pub bound: String,
    pub satisfied: bool,
    pub notes: Vec<String>,
}

impl fmt::Display for PassReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: size {} -> {}, depth {} -> {}, bound [{}] {}",
            self.pass,
            self.input.size,
            self.output.size,
            self.input.depth,
            self.output.depth,
            self.bound,
            if self.satisfied { "ok" } else { "VIOLATED" }
        )?;
        for n in &self.notes {
            write!(f, "; {}", n)?;
        }
        Ok(())
    }
}

/// Names accepted by [`run_pass`].
pub const PASS_NAMES: [&str; 10] = [
    "rescale",
    "ihl-formula",
    "ihl-circuit",
    "brent",
    "add-negcube",
    "parity",
    "vf-to-v3p",
    "derivative",
    "brent3",
    "vsbr3",
];

/// Extra arguments for passes that take them.
#[derive(Clone, Debug, Default)]
pub struct PassArgs {
    pub scale: Option<Coeff>,
    pub var: Option<Var>,
}

pub fn log_base(x: f64, b: f64) -> f64 {
    x.ln() / b.ln()
}

/// Result of a named pass. Most passes produce one circuit; `parity` keeps
/// both roots and `vf-to-v3p` produces a graded representation.
#[derive(Clone, Debug)]
pub enum PassOutput {
    Circuit(Circuit),
    Split(ParitySplit),
    Graded(GradedArity3Repr),
}

impl PassOutput {
    /// The circuit a pipeline continues with: the odd root for `parity`,
    /// nothing for a graded representation.
    pub fn circuit(&self) -> Option<&Circuit> {
        match self {
            PassOutput::Circuit(c) => Some(c),
            PassOutput::Split(s) => Some(&s.odd),
            PassOutput::Graded(_) => None,
        }
    }

    /// Polynomial computed by the output (the odd and even roots added back
    /// together for a split).
    pub fn eval(&self) -> Polynomial {
        match self {
            PassOutput::Circuit(c) => c.eval(),
            PassOutput::Split(s) => &s.odd.eval() + &s.even.eval(),
            PassOutput::Graded(r) => r.reassemble(),
        }
    }

    pub fn to_text(&self) -> String {
        match self {
            PassOutput::Circuit(c) => c.to_text(),
            PassOutput::Split(s) => format!("# odd root\n{}# even root\n{}", s.odd.to_text(), s.even.to_text()),
            PassOutput::Graded(r) => r.to_text(),
        }
    }
}

/// Run a pass by name and check its size/depth bound.
pub fn run_pass(name: &str, c: &Circuit, args: &PassArgs) -> Result<(PassOutput, PassReport), TransformError> {
    let input = Measure::of(c);
    let s = input.size;
    let report = |output: Measure, bound: String, ok: bool, notes: Vec<String>| PassReport {
        pass: name.to_string(),
        input,
        output,
        bound,
        satisfied: ok,
        notes,
    };
    let single = |out: Circuit, bound: String, ok: bool, notes: Vec<String>| {
        let r = report(Measure::of(&out), bound, ok, notes);
        Ok((PassOutput::Circuit(out), r))
    };
    match name {
        "rescale" => {
            let a = args.scale.clone().unwrap_or_else(Coeff::one);
            let out = rescale(c, &a)?;
            let ok = out.size() == s || a.is_zero();
            single(out, "structure unchanged".into(), ok, vec![])
        }
        "ihl-formula" => {
            let out = ihl_formula(c)?;
            let bd = brent(c)?.depth();
            let ok = out.depth() <= 3 * bd + 1;
            single(out, format!("depth <= 3*depth(brent) + 1 = {}", 3 * bd + 1), ok, vec![])
        }
        "ihl-circuit" => {
            let out = ihl_circuit(c)?;
            let o = Measure::of(&out);
            let ok = o.size <= 6 * s && o.depth <= 3 * s;
            single(out, format!("size <= 6*s = {}, depth <= 3*s = {}", 6 * s, 3 * s), ok, vec![])
        }
        "brent" => {
            let out = brent(c)?;
            let lim = 2.0 * log_base(s.max(1) as f64, 1.5) + 2.0;
            let d = out.depth();
            let ok = (d as f64) <= lim.max(input.depth as f64);
            let note = format!("depth/log_1.5(s) = {:.3}", d as f64 / log_base(s.max(2) as f64, 1.5));
            single(out, format!("depth <= 2*log_1.5(s) + 2 = {:.2}", lim), ok, vec![note])
        }
        "add-negcube" => {
            let out = add_negcube(c)?;
            let ok = out.depth() <= 5 * input.depth.max(1);
            single(out, "depth <= 5*depth".into(), ok, vec![])
        }
        "parity" => {
            let split = parity(c)?;
            let ok = split.odd.size() + split.even.size() <= 6 * s * s + 2;
            let notes = vec![format!("odd root size {}, even root size {}", split.odd.size(), split.even.size())];
            let r = report(Measure::of(&split.odd), "size <= 6*s^2 + 2".into(), ok, notes);
            Ok((PassOutput::Split(split), r))
        }
        "derivative" => {
            let Some(v) = args.var else {
                return precondition("derivative", "missing variable");
            };
            let out = derivative(c, v)?;
            let ok = out.depth() <= 2 * input.depth;
            single(out, format!("depth <= 2*depth = {}", 2 * input.depth), ok, vec![])
        }
        "vf-to-v3p" => {
            let repr = vf_to_v3p(c)?;
            let ok = repr.validate().is_ok();
            let output = repr.measure();
            let r = report(output, "stored circuits are arity-3 IHL; depth reported".into(), ok, repr.summary());
            Ok((PassOutput::Graded(repr), r))
        }
        "brent3" => {
            let (out, audit) = brent3(c)?;
            let lim = 2.0 * log_base(s.max(1) as f64, 1.5) + 4.0;
            let ok = (out.depth() as f64) <= lim.max(input.depth as f64) && audit.all_ok();
            let notes = vec![format!("{} recursion steps audited, {} violations", audit.steps.len(), audit.violations())];
            single(out, format!("depth <= 2*log_1.5(s) + 4 = {:.2}; per-step recursions", lim), ok, notes)
        }
        "vsbr3" => {
            let v = vsbr3(c)?;
            let notes = vec![format!("c = depth/(log2 s * log2 d) = {:.3}", v.constant)];
            let ok = v.circuit.validate(Predicate::Arity3).is_ok() && v.circuit.validate(Predicate::Ihl).is_ok();
            single(v.circuit, "depth = O(log s * log d), constant reported".into(), ok, notes)
        }
        other => precondition("pipeline", format!("unknown pass '{}'", other)),
    }
}

/// Output basis of a named pass given the input basis.
pub fn output_basis(name: &str, input: Basis) -> Basis {
    match name {
        "add-negcube" => Basis::AddNegCube,
        "vf-to-v3p" | "vsbr3" | "brent3" => Basis::Arity3,
        _ => input,
    }
}

/// Apply a formula-to-formula tree pass to a circuit and lower the result.
fn lift(
    c: &Circuit,
    basis: Basis,
    f: impl FnOnce(&Formula) -> Result<Option<Formula>, TransformError>,
) -> Result<Circuit, TransformError> {
    let out = f(&c.to_tree())?;
    Ok(crate::circuit::tree::to_circuit_opt(&out, Shape::Formula, basis)?)
}
