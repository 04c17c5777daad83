//! `homlin`: generate families, run passes, compile to matrix words and
//! projections, and verify the results.
//!
//! Exit codes: 0 when everything passes, 1 when a verification or bound
//! audit fails, 2 on invalid input or configuration.

mod artifact;
mod pipeline;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use homlin::families::{gen_family, Family, FamilySpec, Functional};
use homlin::matrixword::{MatrixWord, Projection};
use homlin::par::Exec;
use homlin::poly::{Coeff, Field, Polynomial, Var, DEFAULT_PRIME};
use homlin::transforms::PassArgs;
use homlin::verify::{audit_bounds, verify, verify_border, BorderInput, BorderOpts, Metric, Mode, VerifyReport};

use artifact::Artifact;
use pipeline::{InputSpec, PipelineConfig, RandomKind, Report, TargetSpec};

#[derive(Debug)]
pub enum Failure {
    /// Bad input or configuration (exit 2).
    Invalid(String),
    /// A verification or audit failed (exit 1).
    Check(String),
}

#[derive(Parser)]
#[command(name = "homlin", version, about = "Compile arithmetic formulas to matrix words and projections, and verify them")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print a family polynomial.
    Gen(GenArgs),
    /// Apply passes to a circuit and print the result.
    Transform(TransformArgs),
    /// Compile a formula to a matrix word or a projection.
    Compile(CompileArgs),
    /// Check an artifact against a polynomial, a circuit or a family oracle.
    Verify(VerifyArgs),
    /// Check size/depth bounds, from a run or from raw numbers.
    Audit(AuditArgs),
    /// Input, passes, compile and verification in one run, with artifacts.
    Pipeline(PipelineArgs),
}

#[derive(Args, Clone)]
struct FamilyArgs {
    /// C, Cmatrix, P, Q, IMM, E, nceGeneric or nceL.
    #[arg(long)]
    family: Option<String>,
    /// Functional for nceL: entry(i,j), trace, sum or L(w11,...,w33).
    #[arg(long)]
    functional: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    d: Option<u32>,
}

impl FamilyArgs {
    fn spec(&self) -> Result<Option<FamilySpec>, Failure> {
        let Some(name) = &self.family else { return Ok(None) };
        let (Some(n), Some(d)) = (self.n, self.d) else {
            return Err(Failure::Invalid(format!("--family {} needs --n and --d", name)));
        };
        Ok(Some(FamilySpec::new(family(name, self.functional.as_deref())?, n, d)))
    }
}

fn family(name: &str, functional: Option<&str>) -> Result<Family, Failure> {
    let l = match functional {
        Some(s) => Some(Functional::parse(s).ok_or_else(|| Failure::Invalid(format!("bad functional '{}'", s)))?),
        None => None,
    };
    Family::parse(name, l.as_ref()).ok_or_else(|| Failure::Invalid(format!("unknown family '{}'", name)))
}

#[derive(Args, Clone)]
struct IoArgs {
    /// Input file; stdin when absent or '-'.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// Output file; stdout when absent or '-'.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Exact,
    Border,
    Random,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Args, Clone)]
struct CheckArgs {
    /// Seed for random inputs and evaluation points.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Drop eps powers >= K before taking border limits.
    #[arg(long = "mod-eps", value_name = "K")]
    mod_eps: Option<i64>,
    /// Field for random mode: rational or prime:P.
    #[arg(long, default_value = "prime")]
    field: String,
    /// Evaluation points in random mode.
    #[arg(long, default_value_t = homlin::verify::DEFAULT_TRIALS)]
    trials: usize,
    /// Run verification jobs on one thread.
    #[arg(long)]
    sequential: bool,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

impl CheckArgs {
    fn mode(&self, m: ModeArg) -> Result<Mode, Failure> {
        Ok(match m {
            ModeArg::Exact => Mode::Exact,
            ModeArg::Border => Mode::Border,
            ModeArg::Random => Mode::Random { trials: self.trials, field: parse_field(&self.field)? },
        })
    }

    fn exec(&self) -> Exec {
        if self.sequential {
            Exec::Sequential
        } else {
            Exec::default()
        }
    }
}

fn parse_field(s: &str) -> Result<Field, Failure> {
    match s.split_once(':') {
        None if s == "rational" => Ok(Field::Rational),
        None if s == "prime" => Ok(Field::Prime(DEFAULT_PRIME)),
        Some(("prime", p)) => match p.parse::<u64>() {
            Ok(p) if p >= 2 => Ok(Field::Prime(p)),
            _ => Err(Failure::Invalid(format!("bad prime '{}'", p))),
        },
        _ => Err(Failure::Invalid(format!("bad field '{}', expected rational or prime:P", s))),
    }
}

#[derive(Args, Clone)]
struct PassListArgs {
    /// Pass to apply; repeat or separate with commas to chain.
    #[arg(long = "pass", value_delimiter = ',')]
    passes: Vec<String>,
    /// Scalar for the rescale pass.
    #[arg(long)]
    scale: Option<String>,
    /// Variable for the derivative pass.
    #[arg(long)]
    var: Option<String>,
}

impl PassListArgs {
    fn pass_args(&self) -> Result<PassArgs, Failure> {
        let scale = match &self.scale {
            Some(s) => Some(Coeff::parse(s).map_err(|e| Failure::Invalid(format!("--scale: {}", e)))?),
            None => None,
        };
        let var = match &self.var {
            Some(s) => Some(Var::parse(s).ok_or_else(|| Failure::Invalid(format!("bad variable '{}'", s)))?),
            None => None,
        };
        Ok(PassArgs { scale, var })
    }
}

fn parse_target(words: &[String]) -> Result<Option<TargetSpec>, Failure> {
    if words.is_empty() {
        return Ok(None);
    }
    TargetSpec::parse(words).map(Some).map_err(Failure::Invalid)
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    family: FamilyArgs,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Args)]
struct TransformArgs {
    #[command(flatten)]
    io: IoArgs,
    #[command(flatten)]
    passes: PassListArgs,
    /// Also check each pass's value.
    #[arg(long, value_enum)]
    verify: Option<ModeArg>,
    #[command(flatten)]
    check: CheckArgs,
}

#[derive(Args)]
struct CompileArgs {
    #[command(flatten)]
    io: IoArgs,
    /// offdiag3 I J, trace3 or continuant.
    #[arg(long, num_args = 1..=3, required = true)]
    target: Vec<String>,
    /// Degree to compile for the continuant target.
    #[arg(long)]
    d: Option<u32>,
    #[arg(long, value_enum)]
    verify: Option<ModeArg>,
    #[command(flatten)]
    check: CheckArgs,
}

#[derive(Args)]
struct VerifyArgs {
    /// Polynomial, circuit, word or projection to check.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// Expected value: a polynomial or circuit file.
    #[arg(long, conflicts_with = "against_oracle")]
    against: Option<PathBuf>,
    /// Expected value from a family generator; n and d come from the input's
    /// family header, from --n/--d, or from the input itself.
    #[arg(long = "against-oracle")]
    against_oracle: Option<String>,
    #[arg(long)]
    functional: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    d: Option<u32>,
    /// Defaults to border for border artifacts and exact otherwise.
    #[arg(long, value_enum)]
    verify: Option<ModeArg>,
    #[command(flatten)]
    check: CheckArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum MetricArg {
    IhlCircuit,
    Offdiag3,
    Vsbr,
}

#[derive(Args)]
struct AuditArgs {
    #[arg(long = "in")]
    input: Option<PathBuf>,
    #[command(flatten)]
    passes: PassListArgs,
    #[arg(long, num_args = 1..=3)]
    target: Vec<String>,
    /// Audit raw numbers instead of running anything.
    #[arg(long, value_enum)]
    metric: Option<MetricArg>,
    /// Input size for ihl-circuit.
    #[arg(long)]
    s: Option<usize>,
    #[arg(long)]
    size: Option<usize>,
    #[arg(long)]
    depth: Option<usize>,
    /// Word length for offdiag3.
    #[arg(long)]
    r: Option<usize>,
    #[arg(long)]
    degree: Option<u32>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Args)]
struct PipelineArgs {
    /// Input circuit file; use --family or --random instead to build one.
    #[arg(long = "in", conflicts_with_all = ["family", "random"])]
    input: Option<PathBuf>,
    #[command(flatten)]
    family: FamilyArgs,
    /// Generate a random input from the seed.
    #[arg(long, value_enum, conflicts_with = "family")]
    random: Option<RandomKind>,
    /// Size or depth budget for --random.
    #[arg(long, default_value_t = 4)]
    size: usize,
    /// Variables for --random.
    #[arg(long, default_value_t = 4)]
    nvars: u64,
    #[command(flatten)]
    passes: PassListArgs,
    #[arg(long, num_args = 1..=3)]
    target: Vec<String>,
    /// Degree to compile for the continuant target.
    #[arg(long = "compile-degree")]
    compile_degree: Option<u32>,
    #[arg(long, value_enum, default_value_t = ModeArg::Exact)]
    verify: ModeArg,
    /// Write stage artifacts and report.json here.
    #[arg(long = "out-dir")]
    out_dir: Option<PathBuf>,
    #[command(flatten)]
    check: CheckArgs,
}

fn emit_report(report: &Report, format: Format, to_stderr: bool) -> Result<(), Failure> {
    let text = match format {
        Format::Text => report.summary(),
        Format::Json => serde_json::to_string_pretty(report).map_err(|e| Failure::Invalid(e.to_string()))? + "\n",
    };
    if to_stderr {
        eprint!("{}", text);
        Ok(())
    } else {
        artifact::write_output(None, &text)
    }
}

fn finish(report: &Report) -> Result<(), Failure> {
    if report.ok() {
        Ok(())
    } else if !report.audits_ok {
        Err(Failure::Check("a bound audit failed".into()))
    } else {
        Err(Failure::Check("verification failed".into()))
    }
}

fn gen(a: GenArgs) -> Result<(), Failure> {
    let spec = a.family.spec()?.ok_or_else(|| Failure::Invalid("gen needs --family".into()))?;
    let p = gen_family(&spec).map_err(|e| Failure::Invalid(e.to_string()))?;
    let text = match a.format {
        Format::Text => format!("{}{}\n", artifact::family_header(&spec), p),
        Format::Json => {
            let v = serde_json::json!({ "family": artifact::family_header(&spec).trim_start_matches("# ").trim(), "polynomial": p.to_string(), "terms": p.len() });
            serde_json::to_string_pretty(&v).map_err(|e| Failure::Invalid(e.to_string()))? + "\n"
        }
    };
    artifact::write_output(a.out.as_deref(), &text)
}

fn transform(a: TransformArgs) -> Result<(), Failure> {
    if a.passes.passes.is_empty() {
        return Err(Failure::Invalid("transform needs at least one --pass".into()));
    }
    let cfg = PipelineConfig {
        input: InputSpec::File(a.io.input.clone()),
        passes: a.passes.passes.clone(),
        pass_args: a.passes.pass_args()?,
        target: None,
        mode: a.verify.map(|m| a.check.mode(m)).transpose()?,
        seed: a.check.seed,
        mod_eps: a.check.mod_eps,
        degree: None,
        out_dir: None,
        exec: a.check.exec(),
    };
    let report = pipeline::run(&cfg)?;
    artifact::write_output(a.io.out.as_deref(), &report.last_artifact)?;
    emit_report(&report, a.check.format, true)?;
    finish(&report)
}

fn compile(a: CompileArgs) -> Result<(), Failure> {
    let cfg = PipelineConfig {
        input: InputSpec::File(a.io.input.clone()),
        passes: vec![],
        pass_args: PassArgs::default(),
        target: parse_target(&a.target)?,
        mode: a.verify.map(|m| a.check.mode(m)).transpose()?,
        seed: a.check.seed,
        mod_eps: a.check.mod_eps,
        degree: a.d,
        out_dir: None,
        exec: a.check.exec(),
    };
    let report = pipeline::run(&cfg)?;
    artifact::write_output(a.io.out.as_deref(), &report.last_artifact)?;
    emit_report(&report, a.check.format, true)?;
    finish(&report)
}

/// Largest first index among `x_i` variables.
fn max_index(p: &Polynomial) -> Option<usize> {
    p.vars().iter().filter_map(|v| v.indices().first().copied()).max().map(|i| i as usize)
}

fn verify_cmd(a: VerifyArgs) -> Result<(), Failure> {
    let input = artifact::load(a.input.as_deref())?;
    let target = match (&a.against, &a.against_oracle) {
        (Some(path), _) => match artifact::load(Some(path))? {
            Artifact::Poly(p, _) => p,
            Artifact::Circuit(c) => c.eval(),
            other => return Err(Failure::Invalid(format!("--against must be a polynomial or circuit, got a {}", other.kind()))),
        },
        (None, Some(name)) => {
            let fam = family(name, a.functional.as_deref())?;
            let header = match &input {
                Artifact::Poly(_, h) => h.clone(),
                _ => None,
            };
            let value = plain_value(&input)?;
            let n = a.n.or(header.as_ref().map(|h| h.n)).or_else(|| max_index(&value));
            let d = a.d.or(header.as_ref().map(|h| h.d)).or_else(|| value.degree());
            let (Some(n), Some(d)) = (n, d) else {
                return Err(Failure::Invalid("cannot infer n and d for the oracle; pass --n and --d".into()));
            };
            gen_family(&FamilySpec::new(fam, n, d)).map_err(|e| Failure::Invalid(e.to_string()))?
        }
        (None, None) => return Err(Failure::Invalid("verify needs --against or --against-oracle".into())),
    };
    let exec = a.check.exec();
    let mode = match a.verify {
        Some(m) => a.check.mode(m)?,
        None if is_border(&input) => Mode::Border,
        None => Mode::Exact,
    };
    let report = match (&input, mode) {
        (Artifact::Word(w), Mode::Border) => {
            verify_border(BorderInput::Word(w), &target, BorderOpts { exec, degree: a.d, mod_eps: a.check.mod_eps })
        }
        (Artifact::Projection(p), Mode::Border) => verify_border(
            BorderInput::Projection(p),
            &target,
            BorderOpts { exec, degree: Some(a.d.unwrap_or(p.degree)), mod_eps: a.check.mod_eps },
        ),
        (_, mode) => verify(&limit_value(&input)?, &target, mode, a.check.seed),
    };
    print_verdict(&report, a.check.format)?;
    if report.pass {
        Ok(())
    } else {
        Err(Failure::Check("verification failed".into()))
    }
}

fn is_border(a: &Artifact) -> bool {
    match a {
        Artifact::Word(w) => w.max_abs_eps() > 0 || w.scalar.has_eps(),
        Artifact::Projection(p) => p.border,
        _ => false,
    }
}

/// The value an artifact computes, before any limit.
fn plain_value(a: &Artifact) -> Result<Polynomial, Failure> {
    let bad = |e: &dyn std::fmt::Display| Failure::Invalid(e.to_string());
    Ok(match a {
        Artifact::Poly(p, _) => p.clone(),
        Artifact::Circuit(c) => c.eval(),
        Artifact::Word(w) => MatrixWord::value(w).map_err(|e| bad(&e))?,
        Artifact::Projection(p) => Projection::raw_value(p),
    })
}

/// The value an artifact computes, with the eps-limit taken for border artifacts.
fn limit_value(a: &Artifact) -> Result<Polynomial, Failure> {
    let v = plain_value(a)?;
    if is_border(a) {
        v.eps_limit().map_err(|e| Failure::Check(format!("limit: {}", e)))
    } else {
        Ok(v)
    }
}

fn print_verdict(r: &VerifyReport, format: Format) -> Result<(), Failure> {
    let text = match format {
        Format::Text => {
            let mut s = format!("verify {}: {}", r.mode, if r.pass { "pass" } else { "FAIL" });
            if let Some(w) = &r.witness {
                s.push_str(&format!(" (witness: {})", w));
            }
            s + "\n"
        }
        Format::Json => {
            let v = serde_json::json!({ "mode": r.mode.to_string(), "pass": r.pass, "witness": r.witness });
            serde_json::to_string_pretty(&v).map_err(|e| Failure::Invalid(e.to_string()))? + "\n"
        }
    };
    artifact::write_output(None, &text)
}

fn audit(a: AuditArgs) -> Result<(), Failure> {
    if let Some(m) = a.metric {
        let need = |v: Option<usize>, flag: &str| v.ok_or_else(|| Failure::Invalid(format!("--metric needs --{}", flag)));
        let metric = match m {
            MetricArg::IhlCircuit => {
                Metric::IhlCircuit { input_size: need(a.s, "s")?, size: need(a.size, "size")?, depth: need(a.depth, "depth")? }
            }
            MetricArg::Offdiag3 => Metric::Offdiag3 { depth: need(a.depth, "depth")?, r: need(a.r, "r")? },
            MetricArg::Vsbr => Metric::Vsbr {
                size: need(a.size, "size")?,
                degree: a.degree.ok_or_else(|| Failure::Invalid("--metric vsbr needs --degree".into()))?,
                depth: need(a.depth, "depth")?,
            },
        };
        let audit = audit_bounds(&metric);
        let text = match a.format {
            Format::Text => format!("audit {}: {}\n", m.to_possible_value().map_or_else(String::new, |v| v.get_name().to_string()), audit),
            Format::Json => {
                let v = serde_json::json!({ "pass": audit.pass, "bound": audit.bound, "informational": audit.informational });
                serde_json::to_string_pretty(&v).map_err(|e| Failure::Invalid(e.to_string()))? + "\n"
            }
        };
        artifact::write_output(None, &text)?;
        return if audit.pass { Ok(()) } else { Err(Failure::Check("bound violated".into())) };
    }
    let cfg = PipelineConfig {
        input: InputSpec::File(a.input.clone()),
        passes: a.passes.passes.clone(),
        pass_args: a.passes.pass_args()?,
        target: parse_target(&a.target)?,
        mode: None,
        seed: 0,
        mod_eps: None,
        degree: None,
        out_dir: None,
        exec: Exec::default(),
    };
    let report = pipeline::run(&cfg)?;
    emit_report(&report, a.format, false)?;
    finish(&report)
}

fn run_pipeline(a: PipelineArgs) -> Result<(), Failure> {
    let input = if let Some(spec) = a.family.spec()? {
        InputSpec::Family(spec)
    } else if let Some(kind) = a.random {
        InputSpec::Random { kind, size: a.size, degree: a.family.d.unwrap_or(3), nvars: a.nvars }
    } else {
        InputSpec::File(a.input.clone())
    };
    let cfg = PipelineConfig {
        input,
        passes: a.passes.passes.clone(),
        pass_args: a.passes.pass_args()?,
        target: parse_target(&a.target)?,
        mode: Some(a.check.mode(a.verify)?),
        seed: a.check.seed,
        mod_eps: a.check.mod_eps,
        degree: a.compile_degree,
        out_dir: a.out_dir.clone(),
        exec: a.check.exec(),
    };
    let report = pipeline::run(&cfg)?;
    emit_report(&report, a.check.format, false)?;
    finish(&report)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::Gen(a) => gen(a),
        Cmd::Transform(a) => transform(a),
        Cmd::Compile(a) => compile(a),
        Cmd::Verify(a) => verify_cmd(a),
        Cmd::Audit(a) => audit(a),
        Cmd::Pipeline(a) => run_pipeline(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(msg)) => {
            eprintln!("homlin: {}", msg);
            ExitCode::from(1)
        }
        Err(Failure::Invalid(msg)) => {
            eprintln!("homlin: error: {}", msg);
            ExitCode::from(2)
        }
    }
}
