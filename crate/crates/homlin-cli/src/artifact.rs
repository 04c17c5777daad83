//! Reading and writing the text artifacts the tool passes around.

use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use homlin::circuit::Circuit;
use homlin::families::{Family, FamilySpec, Functional};
use homlin::matrixword::{MatrixWord, Projection};
use homlin::poly::Polynomial;

use crate::Failure;

/// Anything the tool reads: a polynomial (optionally tagged with the family
/// that produced it), a circuit, a matrix word or a projection.
#[derive(Clone, Debug)]
pub enum Artifact {
    Poly(Polynomial, Option<FamilySpec>),
    Circuit(Circuit),
    Word(MatrixWord),
    Projection(Projection),
}

impl Artifact {
    pub fn kind(&self) -> &'static str {
        match self {
            Artifact::Poly(..) => "polynomial",
            Artifact::Circuit(_) => "circuit",
            Artifact::Word(_) => "word",
            Artifact::Projection(_) => "projection",
        }
    }
}

pub fn read_input(path: Option<&Path>) -> Result<(String, String), Failure> {
    match path {
        Some(p) if p != Path::new("-") => {
            let text = fs::read_to_string(p).map_err(|e| Failure::Invalid(format!("{}: {}", p.display(), e)))?;
            Ok((p.display().to_string(), text))
        }
        _ => {
            let mut text = String::new();
            io::stdin().read_to_string(&mut text).map_err(|e| Failure::Invalid(format!("stdin: {}", e)))?;
            Ok(("<stdin>".into(), text))
        }
    }
}

pub fn write_output(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) if p != Path::new("-") => {
            fs::write(p, text).map_err(|e| Failure::Invalid(format!("{}: {}", p.display(), e)))
        }
        _ => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(|e| Failure::Invalid(format!("stdout: {}", e)))
        }
    }
}

fn first_token(text: &str) -> Option<&str> {
    text.lines()
        .flat_map(|l| l.split(';'))
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .find(|l| !l.is_empty())
        .and_then(|l| l.split_whitespace().next())
}

/// Header line written by `gen`: `# family=C n=5 d=3`.
pub fn family_header(spec: &FamilySpec) -> String {
    let (name, functional) = match &spec.family {
        Family::Imm => ("IMM", None),
        Family::NceGeneric => ("nceGeneric", None),
        Family::NceL(l) => ("nceL", Some(l)),
        Family::Ccomb => ("C", None),
        Family::Cmatrix => ("Cmatrix", None),
        Family::E => ("E", None),
        Family::P => ("P", None),
        Family::Q => ("Q", None),
    };
    match functional {
        Some(l) => format!("# family={} functional={} n={} d={}\n", name, l, spec.n, spec.d),
        None => format!("# family={} n={} d={}\n", name, spec.n, spec.d),
    }
}

fn parse_header(text: &str) -> Option<FamilySpec> {
    let line = text.lines().map(str::trim).find(|l| l.starts_with("# family="))?;
    let (mut name, mut functional, mut n, mut d) = (None, None, None, None);
    for tok in line.trim_start_matches('#').split_whitespace() {
        let (k, v) = tok.split_once('=')?;
        match k {
            "family" => name = Some(v),
            "functional" => functional = Some(Functional::parse(v)?),
            "n" => n = v.parse().ok(),
            "d" => d = v.parse().ok(),
            _ => {}
        }
    }
    Some(FamilySpec::new(Family::parse(name?, functional.as_ref())?, n?, d?))
}

pub fn parse_artifact(source: &str, text: &str) -> Result<Artifact, Failure> {
    let bad = |e: &dyn std::fmt::Display| Failure::Invalid(format!("{}: {}", source, e));
    match first_token(text) {
        Some("dim") => MatrixWord::parse(text).map(Artifact::Word).map_err(|e| bad(&e)),
        Some("projection") => Projection::parse(text).map(Artifact::Projection).map_err(|e| bad(&e)),
        Some("shape" | "basis" | "gate" | "output") => Circuit::parse(text).map(Artifact::Circuit).map_err(|e| bad(&e)),
        _ => {
            let body: Vec<&str> = text.lines().filter(|l| !l.trim_start().starts_with('#')).collect();
            let p = Polynomial::parse(body.join(" ").trim()).map_err(|e| bad(&e))?;
            Ok(Artifact::Poly(p, parse_header(text)))
        }
    }
}

pub fn load(path: Option<&Path>) -> Result<Artifact, Failure> {
    let (source, text) = read_input(path)?;
    parse_artifact(&source, &text)
}

pub fn load_circuit(path: Option<&Path>) -> Result<Circuit, Failure> {
    match load(path)? {
        Artifact::Circuit(c) => Ok(c),
        other => Err(Failure::Invalid(format!("expected a circuit, got a {}", other.kind()))),
    }
}
