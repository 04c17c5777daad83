//! Staged runs: load or generate an input, apply named passes, optionally
//! compile to a word or projection, then verify every stage.

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;

use rand::Rng;
use serde::Serialize;

use homlin::circuit::{tree, Basis, Circuit, Shape};
use homlin::families::{gen_family, FamilySpec};
use homlin::matrixword::{
    compile_continuant_even, compile_continuant_odd, compile_offdiag3, compile_trace3, elementary, MatrixWord,
    Projection,
};
use homlin::par::Exec;
use homlin::poly::{Coeff, Polynomial};
use homlin::random::{self, rng};
use homlin::transforms::{add_negcube, brent3, run_pass, GradedArity3Repr, PassArgs, PassOutput, PASS_NAMES};
use homlin::verify::{
    audit_bounds, run_jobs, verify, verify_border, verify_exact, Audit, BorderInput, BorderOpts, Metric, Mode,
    VerifyReport,
};

use crate::artifact;
use crate::Failure;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum RandomKind {
    IhlFormula,
    AffineFormula,
    AffineCircuit,
    GradedArity3,
    Arity3Circuit,
}

#[derive(Clone, Debug)]
pub enum InputSpec {
    File(Option<PathBuf>),
    Family(FamilySpec),
    Random { kind: RandomKind, size: usize, degree: u32, nvars: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TargetSpec {
    /// 0-based off-diagonal position.
    Offdiag3(usize, usize),
    Trace3,
    Continuant,
}

impl TargetSpec {
    pub fn parse(words: &[String]) -> Result<TargetSpec, String> {
        let pos = |s: &str| -> Result<usize, String> {
            match s.parse::<usize>() {
                Ok(k @ 1..=3) => Ok(k - 1),
                _ => Err(format!("bad position '{}', expected 1, 2 or 3", s)),
            }
        };
        match words.iter().map(String::as_str).collect::<Vec<_>>()[..] {
            ["offdiag3", i, j] => {
                let (i, j) = (pos(i)?, pos(j)?);
                if i == j {
                    return Err("offdiag3 needs i != j".into());
                }
                Ok(TargetSpec::Offdiag3(i, j))
            }
            ["offdiag3"] => Ok(TargetSpec::Offdiag3(0, 2)),
            ["trace3"] => Ok(TargetSpec::Trace3),
            ["continuant"] => Ok(TargetSpec::Continuant),
            _ => Err(format!("unknown target '{}'", words.join(" "))),
        }
    }

    pub fn name(&self) -> String {
        match self {
            TargetSpec::Offdiag3(i, j) => format!("offdiag3 {} {}", i + 1, j + 1),
            TargetSpec::Trace3 => "trace3".into(),
            TargetSpec::Continuant => "continuant".into(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct PipelineConfig {
    pub input: InputSpec,
    pub passes: Vec<String>,
    pub pass_args: PassArgs,
    pub target: Option<TargetSpec>,
    /// `None` skips verification (audit-only runs).
    pub mode: Option<Mode>,
    pub seed: u64,
    pub mod_eps: Option<i64>,
    /// Degree to compile for the continuant target; inferred when absent.
    pub degree: Option<u32>,
    pub out_dir: Option<PathBuf>,
    pub exec: Exec,
}

#[derive(Clone, Debug, Serialize)]
pub struct SizeDepth {
    pub size: usize,
    pub depth: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct Verdict {
    pub mode: String,
    pub pass: bool,
    pub witness: Option<String>,
}

impl From<&VerifyReport> for Verdict {
    fn from(r: &VerifyReport) -> Verdict {
        Verdict { mode: r.mode.to_string(), pass: r.pass, witness: r.witness.clone() }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Stage {
    pub name: String,
    pub kind: &'static str,
    pub input: SizeDepth,
    /// Absent for compile stages, whose output size is `r`.
    pub output: Option<SizeDepth>,
    pub bound: String,
    pub bound_ok: bool,
    pub notes: Vec<String>,
    pub metrics: BTreeMap<String, serde_json::Value>,
    pub artifact: Option<String>,
    pub verify: Option<Verdict>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub seed: u64,
    pub input: String,
    pub passes: Vec<String>,
    pub target: Option<String>,
    pub stages: Vec<Stage>,
    pub audits_ok: bool,
    pub verified: bool,
    /// Text of the last artifact produced.
    #[serde(skip)]
    pub last_artifact: String,
}

impl Report {
    pub fn ok(&self) -> bool {
        self.audits_ok && self.verified
    }

    /// Per-stage metrics, bound audits and verdicts.
    pub fn summary(&self) -> String {
        let mut s = format!("homlin pipeline (seed {})\ninput: {}\n", self.seed, self.input);
        if self.stages.is_empty() {
            return s;
        }
        for (i, st) in self.stages.iter().enumerate() {
            let mark = if st.bound_ok { "  " } else { "!!" };
            s.push_str(&format!("{} stage {} {} {}: ", mark, i + 1, st.kind, st.name));
            match &st.output {
                Some(o) => s.push_str(&format!(
                    "size {} -> {}, depth {} -> {}",
                    st.input.size, o.size, st.input.depth, o.depth
                )),
                None => s.push_str(&format!("input size {}, depth {}", st.input.size, st.input.depth)),
            }
            for (k, v) in &st.metrics {
                s.push_str(&format!(", {} = {}", k, v));
            }
            let verdict = if st.bound_ok { "ok" } else { "VIOLATED" };
            s.push_str(&format!("\n     bound {}: {}\n", verdict, st.bound));
            for n in &st.notes {
                s.push_str(&format!("     note: {}\n", n));
            }
            if let Some(v) = &st.verify {
                s.push_str(&format!("     verify {}: {}", v.mode, if v.pass { "pass" } else { "FAIL" }));
                if let Some(w) = &v.witness {
                    s.push_str(&format!(" (witness: {})", w));
                }
                s.push('\n');
            }
        }
        s.push_str(&format!(
            "result: {} (audits {}, verification {})\n",
            if self.ok() { "PASS" } else { "FAIL" },
            if self.audits_ok { "ok" } else { "violated" },
            if self.mode_skipped() { "skipped" } else if self.verified { "pass" } else { "FAIL" }
        ));
        s
    }

    fn mode_skipped(&self) -> bool {
        self.stages.iter().all(|s| s.verify.is_none())
    }
}

/// What the next stage receives.
#[derive(Clone, Debug)]
enum Current {
    Circuit(Circuit),
    Graded(GradedArity3Repr),
}

/// Shape/basis state used to check a plan before anything runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum PlanState {
    Circuit(Shape, Basis),
    Graded,
}

fn requirement(pass: &str) -> (bool, &'static [Basis]) {
    match pass {
        "rescale" => (true, &[Basis::Arity2, Basis::Arity3]),
        "ihl-formula" | "brent" | "vf-to-v3p" => (true, &[Basis::Arity2]),
        "ihl-circuit" => (false, &[Basis::Arity2]),
        "add-negcube" => (true, &[Basis::Arity3, Basis::AddNegCube]),
        "parity" | "derivative" => (true, &[Basis::Arity2, Basis::Arity3]),
        "brent3" => (true, &[Basis::Arity3]),
        "vsbr3" => (false, &[Basis::Arity3]),
        _ => (false, &[]),
    }
}

fn describe(needs_formula: bool, bases: &[Basis]) -> String {
    let names: Vec<&str> = bases.iter().map(|b| b.name()).collect();
    format!("{} over {}", if needs_formula { "a formula" } else { "a circuit" }, names.join(" or "))
}

/// Check the pass list and target against the input's shape and basis.
pub fn check_plan(c: &Circuit, passes: &[String], target: Option<TargetSpec>) -> Result<(), String> {
    let mut state = PlanState::Circuit(c.shape, c.basis);
    for (i, p) in passes.iter().enumerate() {
        if !PASS_NAMES.contains(&p.as_str()) {
            return Err(format!("unknown pass '{}' (known: {})", p, PASS_NAMES.join(", ")));
        }
        let (needs_formula, bases) = requirement(p);
        let (shape, basis) = match state {
            PlanState::Graded => {
                return Err(format!("pass {} ({}) cannot follow vf-to-v3p; only the continuant target can", i + 1, p))
            }
            PlanState::Circuit(s, b) => (s, b),
        };
        if (needs_formula && shape != Shape::Formula) || !bases.contains(&basis) {
            return Err(format!(
                "pass {} ({}) needs {}, but its input is a {} over {}",
                i + 1,
                p,
                describe(needs_formula, bases),
                shape.name(),
                basis.name()
            ));
        }
        state = match p.as_str() {
            "vf-to-v3p" => PlanState::Graded,
            "ihl-circuit" | "vsbr3" => PlanState::Circuit(Shape::Circuit, homlin::transforms::output_basis(p, basis)),
            _ => PlanState::Circuit(shape, homlin::transforms::output_basis(p, basis)),
        };
    }
    let Some(t) = target else { return Ok(()) };
    let ok = match (t, state) {
        (TargetSpec::Offdiag3(..) | TargetSpec::Trace3, PlanState::Circuit(Shape::Formula, Basis::Arity2)) => true,
        (TargetSpec::Continuant, PlanState::Graded) => true,
        (TargetSpec::Continuant, PlanState::Circuit(Shape::Formula, Basis::AddNegCube | Basis::Arity2)) => true,
        _ => false,
    };
    if ok {
        return Ok(());
    }
    let got = match state {
        PlanState::Graded => "a graded arity-3 representation".to_string(),
        PlanState::Circuit(s, b) => format!("a {} over {}", s.name(), b.name()),
    };
    let need = match t {
        TargetSpec::Continuant => "an addnegcube formula (odd degree), an arity2 formula (even degree) or vf-to-v3p output",
        _ => "an arity2 formula",
    };
    Err(format!("target {} needs {}, but gets {}", t.name(), need, got))
}

fn sd(c: &Circuit) -> SizeDepth {
    SizeDepth { size: c.size(), depth: c.depth() }
}

fn graded_sd(g: &GradedArity3Repr) -> SizeDepth {
    let m = g.measure();
    SizeDepth { size: m.size, depth: m.depth }
}

fn build_input(cfg: &PipelineConfig, r: &mut impl Rng) -> Result<(Circuit, String), Failure> {
    match &cfg.input {
        InputSpec::File(path) => {
            let c = artifact::load_circuit(path.as_deref())?;
            let name = path.as_ref().map_or("<stdin>".to_string(), |p| p.display().to_string());
            Ok((c, name))
        }
        InputSpec::Family(spec) => {
            let p = gen_family(spec).map_err(|e| Failure::Invalid(e.to_string()))?;
            let f = tree::from_polynomial(&p);
            let c = tree::to_circuit_opt(&f, Shape::Formula, Basis::Arity2).map_err(|e| Failure::Invalid(e.to_string()))?;
            let header = artifact::family_header(spec);
            Ok((c, format!("sum-of-monomials formula for {}", header.trim_start_matches("# ").trim())))
        }
        InputSpec::Random { kind, size, degree, nvars } => {
            let (size, d, n) = (*size, *degree, *nvars);
            let c = match kind {
                RandomKind::IhlFormula => random::ihl_formula(r, size, n, d),
                RandomKind::AffineFormula => random::affine_formula(r, size, n, d),
                RandomKind::AffineCircuit => random::affine_circuit(r, size, n, d),
                RandomKind::GradedArity3 => {
                    if d % 2 == 0 {
                        return Err(Failure::Invalid("graded-arity3 inputs need an odd degree".into()));
                    }
                    random::graded_arity3_formula(r, d, size, n)
                }
                RandomKind::Arity3Circuit => random::homogeneous_arity3_circuit(r, size, n, d),
            };
            let name = clap::ValueEnum::to_possible_value(kind).map_or_else(String::new, |v| v.get_name().to_string());
            Ok((c, format!("random {} (size {}, degree {}, {} variables)", name, size, d, n)))
        }
    }
}

fn expected_after(pass: &str, f: &Polynomial, args: &PassArgs) -> Polynomial {
    match pass {
        "rescale" => f.scale(&args.scale.clone().unwrap_or_else(Coeff::one)),
        "ihl-formula" | "ihl-circuit" => f - &Polynomial::constant(f.constant_term()),
        "derivative" => args.var.map_or_else(Polynomial::zero, |v| f.partial_derivative(v)),
        _ => f.clone(),
    }
}

/// A verification job; all jobs run after the stages, possibly in parallel.
enum Job {
    Equal { got: Polynomial, want: Polynomial, seed: u64 },
    Offdiag { word: MatrixWord, i: usize, j: usize, want: Polynomial, seed: u64 },
    Word { word: MatrixWord, want: Polynomial },
    Projection { proj: Projection, want: Polynomial, degree: u32 },
}

fn run_job(job: &Job, mode: Mode, exec: Exec, mod_eps: Option<i64>) -> VerifyReport {
    match job {
        Job::Equal { got, want, seed } => verify(got, want, mode, *seed),
        Job::Offdiag { word, i, j, want, seed } => match mode {
            Mode::Random { .. } => match word.value() {
                Ok(v) => verify(&v, want, mode, *seed),
                Err(e) => verify_exact(&Polynomial::zero(), &Polynomial::zero()).failed(e.to_string()),
            },
            _ => {
                let got = word.expand_minus_id();
                let expect = elementary(3, *i, *j, want.clone());
                for (r, (gr, er)) in got.iter().zip(&expect).enumerate() {
                    for (c, (g, e)) in gr.iter().zip(er).enumerate() {
                        let rep = verify_exact(g, e);
                        if !rep.pass {
                            let w = rep.witness.clone().unwrap_or_default();
                            return rep.failed(format!("entry ({},{}): {}", r + 1, c + 1, w));
                        }
                    }
                }
                verify_exact(want, want)
            }
        },
        Job::Word { word, want } => {
            verify_border(BorderInput::Word(word), want, BorderOpts { exec, degree: None, mod_eps })
        }
        Job::Projection { proj, want, degree } => {
            verify_border(BorderInput::Projection(proj), want, BorderOpts { exec, degree: Some(*degree), mod_eps })
        }
    }
}

trait Failed {
    fn failed(self, witness: String) -> VerifyReport;
}

impl Failed for VerifyReport {
    fn failed(mut self, witness: String) -> VerifyReport {
        self.pass = false;
        self.witness = Some(witness);
        self
    }
}

struct Artifacts {
    dir: Option<PathBuf>,
}

impl Artifacts {
    fn write(&self, name: &str, text: &str) -> Result<Option<String>, Failure> {
        let Some(dir) = &self.dir else { return Ok(None) };
        let path = dir.join(name);
        fs::write(&path, text).map_err(|e| Failure::Invalid(format!("{}: {}", path.display(), e)))?;
        Ok(Some(name.to_string()))
    }
}

fn audit_stage(a: &Audit) -> (String, bool) {
    (a.bound.clone(), a.pass)
}

fn compile_err(e: impl std::fmt::Display) -> Failure {
    Failure::Invalid(format!("compile: {}", e))
}

/// Run a pipeline. Configuration problems are `Failure::Invalid`; a failed
/// audit or verification is reported in the returned report.
pub fn run(cfg: &PipelineConfig) -> Result<Report, Failure> {
    let mut r = rng(cfg.seed);
    let (input, input_name) = build_input(cfg, &mut r)?;
    check_plan(&input, &cfg.passes, cfg.target).map_err(Failure::Invalid)?;
    if let Some(dir) = &cfg.out_dir {
        fs::create_dir_all(dir).map_err(|e| Failure::Invalid(format!("{}: {}", dir.display(), e)))?;
    }
    let out = Artifacts { dir: cfg.out_dir.clone() };
    out.write("00-input.circ", &input.to_text())?;

    let mut stages: Vec<Stage> = Vec::new();
    let mut jobs: Vec<(usize, Job)> = Vec::new();
    let mut last_artifact = input.to_text();
    let mut value = input.eval();
    let mut current = Current::Circuit(input);

    for (k, name) in cfg.passes.iter().enumerate() {
        let Current::Circuit(c) = &current else { unreachable!("checked by check_plan") };
        let (output, rep) = run_pass(name, c, &cfg.pass_args).map_err(|e| Failure::Invalid(e.to_string()))?;
        let ext = match output {
            PassOutput::Graded(_) => "graded",
            _ => "circ",
        };
        last_artifact = output.to_text();
        let artifact = out.write(&format!("{:02}-{}.{}", k + 1, name, ext), &last_artifact)?;
        let want = expected_after(name, &value, &cfg.pass_args);
        let got = output.eval();
        jobs.push((stages.len(), Job::Equal { got: got.clone(), want, seed: r.gen() }));
        let (bound, bound_ok) = audit_stage(&audit_bounds(&Metric::Pass(&rep)));
        let output_sd = match &output {
            PassOutput::Graded(g) => graded_sd(g),
            _ => SizeDepth { size: rep.output.size, depth: rep.output.depth },
        };
        stages.push(Stage {
            name: name.clone(),
            kind: "pass",
            input: SizeDepth { size: rep.input.size, depth: rep.input.depth },
            output: Some(output_sd),
            bound,
            bound_ok,
            notes: rep.notes.clone(),
            metrics: BTreeMap::new(),
            artifact,
            verify: None,
        });
        current = match output {
            PassOutput::Circuit(c) => {
                value = got;
                Current::Circuit(c)
            }
            PassOutput::Split(s) => {
                value = s.odd.eval();
                Current::Circuit(s.odd)
            }
            PassOutput::Graded(g) => {
                value = got;
                Current::Graded(g)
            }
        };
    }

    if let Some(t) = cfg.target {
        let k = cfg.passes.len() + 1;
        let mut metrics: BTreeMap<String, serde_json::Value> = BTreeMap::new();
        let stage = match (t, &current) {
            (TargetSpec::Offdiag3(i, j), Current::Circuit(c)) => {
                let w = compile_offdiag3(c, i, j, &Coeff::one()).map_err(compile_err)?;
                metrics.insert("r".into(), w.len().into());
                let (bound, bound_ok) = audit_stage(&audit_bounds(&Metric::Offdiag3 { depth: c.depth(), r: w.len() }));
                last_artifact = w.to_text();
                let artifact = out.write(&format!("{:02}-offdiag3.word", k), &last_artifact)?;
                let input = sd(c);
                jobs.push((stages.len(), Job::Offdiag { word: w, i, j, want: value.clone(), seed: r.gen() }));
                Stage { name: t.name(), kind: "compile", input, output: None, bound, bound_ok, notes: vec![], metrics, artifact, verify: None }
            }
            (TargetSpec::Trace3, Current::Circuit(c)) => {
                let w = compile_trace3(c).map_err(compile_err)?;
                metrics.insert("r".into(), w.len().into());
                let (bound, bound_ok) = audit_stage(&audit_bounds(&Metric::Offdiag3 { depth: c.depth(), r: w.len() }));
                last_artifact = w.to_text();
                let artifact = out.write(&format!("{:02}-trace3.word", k), &last_artifact)?;
                let input = sd(c);
                let notes = vec!["border word read at entry (1,1) with scalar eps^-2".to_string()];
                jobs.push((stages.len(), Job::Word { word: w, want: value.clone() }));
                Stage { name: t.name(), kind: "compile", input, output: None, bound, bound_ok, notes, metrics, artifact, verify: None }
            }
            (TargetSpec::Continuant, cur) => {
                let (input, (proj, rep), d, notes) = compile_continuant(cur, &value, cfg.degree)?;
                metrics.insert("r".into(), rep.r.into());
                metrics.insert("pads".into(), rep.pads.into());
                metrics.insert("k".into(), rep.max_k.into());
                metrics.insert("d".into(), d.into());
                let (bound, bound_ok) = audit_stage(&audit_bounds(&Metric::Continuant(&rep)));
                last_artifact = proj.to_text();
                let artifact = out.write(&format!("{:02}-continuant.proj", k), &last_artifact)?;
                let want = value.homog_component(d);
                jobs.push((stages.len(), Job::Projection { proj, want, degree: d }));
                Stage { name: t.name(), kind: "compile", input, output: None, bound, bound_ok, notes, metrics, artifact, verify: None }
            }
            (_, Current::Graded(_)) => unreachable!("checked by check_plan"),
        };
        stages.push(stage);
    }

    let mut verified = true;
    if let Some(mode) = cfg.mode {
        let results = run_jobs(cfg.exec, &jobs, |(_, job)| run_job(job, mode, cfg.exec, cfg.mod_eps));
        for ((idx, _), rep) in jobs.iter().zip(&results) {
            verified &= rep.pass;
            stages[*idx].verify = Some(Verdict::from(rep));
        }
    }
    let report = Report {
        tool: "homlin",
        version: env!("CARGO_PKG_VERSION"),
        seed: cfg.seed,
        input: input_name,
        passes: cfg.passes.clone(),
        target: cfg.target.map(|t| t.name()),
        audits_ok: stages.iter().all(|s| s.bound_ok),
        verified,
        stages,
        last_artifact,
    };
    let json = serde_json::to_string_pretty(&report).map_err(|e| Failure::Invalid(e.to_string()))? + "\n";
    out.write("report.json", &json)?;
    Ok(report)
}

type Compiled = (SizeDepth, (Projection, homlin::matrixword::ContinuantReport), u32, Vec<String>);

fn compile_continuant(cur: &Current, value: &Polynomial, degree: Option<u32>) -> Result<Compiled, Failure> {
    match cur {
        Current::Circuit(c) => {
            let d = match degree.or(value.degree()) {
                Some(d) => d,
                None => return Err(Failure::Invalid("compile: the zero polynomial has no degree".into())),
            };
            if d % 2 == 1 {
                let out = compile_continuant_odd(c, d).map_err(compile_err)?;
                Ok((sd(c), out, d, vec![]))
            } else {
                let g = homlin::transforms::vf_to_v3p(c).map_err(compile_err)?;
                let out = compile_continuant_even(&g, d).map_err(compile_err)?;
                Ok((sd(c), out, d, vec!["even degree: went through vf-to-v3p".into()]))
            }
        }
        Current::Graded(g) => {
            let top = g.odd_parts.keys().chain(g.even_parts.keys()).max().copied();
            let d = match degree.or(top) {
                Some(d) => d,
                None => return Err(Failure::Invalid("compile: nothing to compile, the representation is constant".into())),
            };
            if d % 2 == 0 {
                let out = compile_continuant_even(g, d).map_err(compile_err)?;
                return Ok((graded_sd(g), out, d, vec![]));
            }
            let part = g.odd_parts.get(&d).ok_or_else(|| compile_err(format!("no odd part of degree {}", d)))?;
            let mut notes = vec![format!("odd part of degree {} went through add-negcube", d)];
            let balanced = match brent3(part) {
                Ok((b, _)) => {
                    notes.push("balanced with brent3 first".into());
                    b
                }
                Err(_) => part.clone(),
            };
            let n = add_negcube(&balanced).map_err(compile_err)?;
            let out = compile_continuant_odd(&n, d).map_err(compile_err)?;
            Ok((sd(part), out, d, notes))
        }
    }
}
