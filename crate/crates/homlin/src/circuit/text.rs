//! Line-based exchange format.
//!
//! ```text
//! shape formula
//! basis arity2
//! var x1 x2
//! gate g0 = input 2*x1 + 3
//! gate g1 = input x2
//! gate g2 = mul g0 g1
//! output g2
//! ```
//! `;` separates statements on one line and `#` starts a comment.

use std::collections::{BTreeSet, HashMap};

use crate::poly::{Coeff, LinearForm, PolyError, Polynomial, Var};

use super::{Basis, Circuit, CircuitError, Gate, Shape};

struct Stmt<'a> {
    line: usize,
    col: usize,
    text: &'a str,
}

#[derive(Clone)]
enum RawKind {
    Input(LinearForm, Coeff),
    Add(Vec<String>, Option<[Coeff; 2]>),
    Mul(Vec<String>, Option<[Coeff; 2]>),
    Mul3(Vec<String>),
    NegCube(String, Option<Coeff>),
    Alpha,
    Z,
}

struct RawGate {
    name: String,
    kind: RawKind,
    line: usize,
    col: usize,
}

fn syntax<T>(line: usize, col: usize, msg: impl Into<String>) -> Result<T, CircuitError> {
    Err(CircuitError::Syntax {
        line,
        col,
        msg: msg.into(),
    })
}

fn statements(text: &str) -> Vec<Stmt<'_>> {
    let mut out = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        };
        let mut start = 0;
        for piece in line.split(';') {
            let lead = piece.len() - piece.trim_start().len();
            let t = piece.trim();
            if !t.is_empty() {
                out.push(Stmt {
                    line: ln + 1,
                    col: start + lead + 1,
                    text: t,
                });
            }
            start += piece.len() + 1;
        }
    }
    out
}

/// Whitespace tokens with their byte offsets.
fn tokens(s: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut i = 0;
    for tok in s.split_whitespace() {
        let off = s[i..].find(tok).expect("token present") + i;
        out.push((off, tok));
        i = off + tok.len();
    }
    out
}

fn parse_coeff(tok: &str, line: usize, col: usize) -> Result<Coeff, CircuitError> {
    Coeff::parse(tok).map_err(|e| match e {
        PolyError::Syntax { col: c, msg } => CircuitError::Syntax {
            line,
            col: col + c - 1,
            msg,
        },
        other => CircuitError::Syntax {
            line,
            col,
            msg: other.to_string(),
        },
    })
}

pub(super) fn parse(text: &str) -> Result<Circuit, CircuitError> {
    let mut shape = None;
    let mut basis = None;
    let mut declared: BTreeSet<Var> = BTreeSet::new();
    let mut raw: Vec<RawGate> = Vec::new();
    let mut output: Option<(String, usize, usize)> = None;

    for st in statements(text) {
        let toks = tokens(st.text);
        let at = |k: usize| st.col + toks[k].0;
        match toks[0].1 {
            "shape" => {
                shape = match toks.get(1).map(|t| t.1) {
                    Some("formula") => Some(Shape::Formula),
                    Some("circuit") => Some(Shape::Circuit),
                    _ => return syntax(st.line, st.col, "expected 'shape formula|circuit'"),
                }
            }
            "basis" => {
                basis = match toks.get(1).and_then(|t| Basis::parse(t.1)) {
                    Some(b) => Some(b),
                    None => {
                        return syntax(st.line, st.col, "expected 'basis arity2|arity3|addnegcube'")
                    }
                }
            }
            "var" => {
                for k in 1..toks.len() {
                    match Var::parse(toks[k].1) {
                        Some(v) => {
                            declared.insert(v);
                        }
                        None => return syntax(st.line, at(k), format!("bad variable '{}'", toks[k].1)),
                    }
                }
            }
            "output" => {
                if toks.len() != 2 {
                    return syntax(st.line, st.col, "expected 'output <id>'");
                }
                output = Some((toks[1].1.to_string(), st.line, at(1)));
            }
            "gate" => {
                if toks.len() < 4 || toks[2].1 != "=" {
                    return syntax(st.line, st.col, "expected 'gate <id> = <kind> ...'");
                }
                let name = toks[1].1.to_string();
                let kind_tok = toks[3].1;
                let args: Vec<&str> = toks[4..].iter().map(|t| t.1).collect();
                let arg_col = |k: usize| at(4 + k);
                let refs = |n: usize| -> Result<Vec<String>, CircuitError> {
                    if args.len() < n {
                        return syntax(st.line, at(3), format!("{} expects {} operands", kind_tok, n));
                    }
                    Ok(args[..n].iter().map(|s| s.to_string()).collect())
                };
                let pair = |n: usize| -> Result<Option<[Coeff; 2]>, CircuitError> {
                    match args.len() - n {
                        0 => Ok(None),
                        2 => Ok(Some([
                            parse_coeff(args[n], st.line, arg_col(n))?,
                            parse_coeff(args[n + 1], st.line, arg_col(n + 1))?,
                        ])),
                        _ => syntax(st.line, at(3), "expected zero or two edge scalars"),
                    }
                };
                let kind = match kind_tok {
                    "input" => {
                        let off = toks[3].0 + kind_tok.len();
                        let body = &st.text[off..];
                        let p = Polynomial::parse(body).map_err(|e| match e {
                            PolyError::Syntax { col, msg } => CircuitError::Syntax {
                                line: st.line,
                                col: st.col + off + col - 1,
                                msg,
                            },
                            other => CircuitError::Syntax {
                                line: st.line,
                                col: st.col + off,
                                msg: other.to_string(),
                            },
                        })?;
                        match LinearForm::split_affine(&p) {
                            Some((lin, c)) => RawKind::Input(lin, c),
                            None => return syntax(st.line, at(3), "input must be an affine form"),
                        }
                    }
                    "add" => RawKind::Add(refs(2)?, pair(2)?),
                    "mul" => RawKind::Mul(refs(2)?, pair(2)?),
                    "mul3" => {
                        if args.len() != 3 {
                            return syntax(st.line, at(3), "mul3 expects 3 operands");
                        }
                        RawKind::Mul3(refs(3)?)
                    }
                    "negcube" => {
                        let r = refs(1)?;
                        let s = match args.len() {
                            1 => None,
                            2 => Some(parse_coeff(args[1], st.line, arg_col(1))?),
                            _ => return syntax(st.line, at(3), "negcube expects 1 operand and an optional scalar"),
                        };
                        RawKind::NegCube(r[0].clone(), s)
                    }
                    "alpha" | "zvar" => {
                        if !args.is_empty() {
                            return syntax(st.line, arg_col(0), "unexpected operand");
                        }
                        if kind_tok == "alpha" {
                            RawKind::Alpha
                        } else {
                            RawKind::Z
                        }
                    }
                    other => return syntax(st.line, at(3), format!("unknown gate kind '{}'", other)),
                };
                raw.push(RawGate {
                    name,
                    kind,
                    line: st.line,
                    col: st.col,
                });
            }
            other => return syntax(st.line, st.col, format!("unknown statement '{}'", other)),
        }
    }

    let mut index: HashMap<&str, usize> = HashMap::new();
    for (i, g) in raw.iter().enumerate() {
        if index.insert(g.name.as_str(), i).is_some() {
            return syntax(g.line, g.col, format!("duplicate gate '{}'", g.name));
        }
    }
    let deps = |g: &RawGate| -> Vec<String> {
        match &g.kind {
            RawKind::Add(r, _) | RawKind::Mul(r, _) | RawKind::Mul3(r) => r.clone(),
            RawKind::NegCube(r, _) => vec![r.clone()],
            _ => Vec::new(),
        }
    };
    let mut edges: Vec<Vec<usize>> = Vec::with_capacity(raw.len());
    for g in &raw {
        let mut e = Vec::new();
        for d in deps(g) {
            match index.get(d.as_str()) {
                Some(&j) => e.push(j),
                None => return syntax(g.line, g.col, format!("unknown gate '{}'", d)),
            }
        }
        edges.push(e);
    }

    // Depth-first topological order in definition order; gray nodes mark cycles.
    let mut state = vec![0u8; raw.len()];
    let mut order: Vec<usize> = Vec::with_capacity(raw.len());
    for root in 0..raw.len() {
        if state[root] != 0 {
            continue;
        }
        let mut stack: Vec<(usize, usize)> = vec![(root, 0)];
        state[root] = 1;
        while let Some(&mut (v, ref mut k)) = stack.last_mut() {
            if *k < edges[v].len() {
                let w = edges[v][*k];
                *k += 1;
                match state[w] {
                    0 => {
                        state[w] = 1;
                        stack.push((w, 0));
                    }
                    1 => {
                        return Err(CircuitError::Cycle {
                            gate: raw[w].name.clone(),
                        })
                    }
                    _ => {}
                }
            } else {
                state[v] = 2;
                order.push(v);
                stack.pop();
            }
        }
    }
    let mut pos = vec![0usize; raw.len()];
    for (p, &i) in order.iter().enumerate() {
        pos[i] = p;
    }
    let r = |name: &String| pos[index[name.as_str()]];
    let gates: Vec<Gate> = order
        .iter()
        .map(|&i| match &raw[i].kind {
            RawKind::Input(form, c) => Gate::Input {
                form: form.clone(),
                constant: c.clone(),
            },
            RawKind::Add(a, s) => Gate::Add {
                children: [r(&a[0]), r(&a[1])],
                scalars: s.clone(),
            },
            RawKind::Mul(a, s) => Gate::Mul2 {
                children: [r(&a[0]), r(&a[1])],
                scalars: s.clone(),
            },
            RawKind::Mul3(a) => Gate::Mul3 {
                children: [r(&a[0]), r(&a[1]), r(&a[2])],
            },
            RawKind::NegCube(a, s) => Gate::NegCube {
                child: r(a),
                scalar: s.clone(),
            },
            RawKind::Alpha => Gate::Alpha,
            RawKind::Z => Gate::Z,
        })
        .collect();

    let (out_name, oline, ocol) = match output {
        Some(o) => o,
        None => return syntax(text.lines().count().max(1), 1, "missing 'output' statement"),
    };
    let out = match index.get(out_name.as_str()) {
        Some(&i) => pos[i],
        None => return syntax(oline, ocol, format!("unknown gate '{}'", out_name)),
    };
    let basis = basis.unwrap_or_else(|| Circuit::infer_basis(&gates));
    let mut c = Circuit::new(gates, out, shape.unwrap_or(Shape::Circuit), basis)?;
    declared.extend(c.vars.iter().copied());
    c.vars = declared.into_iter().collect();
    Ok(c)
}

pub(super) fn print(c: &Circuit) -> String {
    let mut s = String::new();
    s.push_str(&format!("shape {}\n", c.shape.name()));
    s.push_str(&format!("basis {}\n", c.basis.name()));
    if !c.vars.is_empty() {
        let names: Vec<String> = c.vars.iter().map(|v| v.name()).collect();
        s.push_str(&format!("var {}\n", names.join(" ")));
    }
    let pair = |sc: &Option<[Coeff; 2]>| match sc {
        None => String::new(),
        Some([a, b]) => format!(" {} {}", a.to_compact(), b.to_compact()),
    };
    for (i, g) in c.gates.iter().enumerate() {
        let body = match g {
            Gate::Input { form, constant } => format!(
                "input {}",
                &form.to_polynomial() + &Polynomial::constant(constant.clone())
            ),
            Gate::Add { children: [a, b], scalars } => format!("add g{} g{}{}", a, b, pair(scalars)),
            Gate::Mul2 { children: [a, b], scalars } => format!("mul g{} g{}{}", a, b, pair(scalars)),
            Gate::Mul3 { children: [a, b, d] } => format!("mul3 g{} g{} g{}", a, b, d),
            Gate::NegCube { child, scalar } => match scalar {
                None => format!("negcube g{}", child),
                Some(t) => format!("negcube g{} {}", child, t.to_compact()),
            },
            Gate::Alpha => "alpha".to_string(),
            Gate::Z => "zvar".to_string(),
        };
        s.push_str(&format!("gate g{} = {}\n", i, body));
    }
    s.push_str(&format!("output g{}\n", c.output));
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_input_inline() {
        let c = parse("gate g1 = input 2*x1 ; output g1").unwrap();
        assert_eq!(c.size(), 1);
        assert_eq!(c.eval(), Polynomial::parse("2*x1").unwrap());
    }

    #[test]
    fn formula_with_edge_scalar_is_rejected() {
        let t = "shape formula\ngate a = input x1\ngate b = input x2\ngate c = add a b 2 1\noutput c\n";
        assert!(matches!(parse(t), Err(CircuitError::BasisViolation { .. })));
        let t = t.replace("shape formula", "shape circuit");
        assert!(parse(&t).is_ok());
    }

    #[test]
    fn forward_references_and_cycles() {
        let t = "gate c = mul a b\ngate a = input x1\ngate b = input x2 + 1\noutput c";
        let c = parse(t).unwrap();
        assert_eq!(c.eval(), Polynomial::parse("x1*x2 + x1").unwrap());
        let t = "gate a = add b b\ngate b = add a a\noutput a";
        assert!(matches!(parse(t), Err(CircuitError::Cycle { .. })));
    }

    #[test]
    fn syntax_error_location() {
        let t = "gate a = input x1\ngate b = input x1 + * x2\noutput b";
        match parse(t) {
            Err(CircuitError::Syntax { line, col, .. }) => assert_eq!((line, col), (2, 21)),
            other => panic!("{:?}", other),
        }
        match parse("gate a = frob x1\noutput a") {
            Err(CircuitError::Syntax { line, col, .. }) => assert_eq!((line, col), (1, 10)),
            other => panic!("{:?}", other),
        }
        assert!(matches!(parse("gate a = input x1"), Err(CircuitError::Syntax { .. })));
    }

    #[test]
    fn round_trip_all_gate_kinds() {
        let t = "shape circuit\nbasis addnegcube\nvar x1 x2 x9\n\
                 gate g0 = input 2*x1 - 1/3*eps^-1*x2\ngate g1 = alpha\ngate g2 = zvar\n\
                 gate g3 = add g0 g1 1 -eps^2\ngate g4 = negcube g3 -1/24\n\
                 gate g5 = add g4 g2\noutput g5\n";
        let c = parse(t).unwrap();
        assert_eq!(c.vars.len(), 3);
        let printed = print(&c);
        assert_eq!(parse(&printed).unwrap(), c);
        assert_eq!(print(&parse(&printed).unwrap()), printed);
    }
}
