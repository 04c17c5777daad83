//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero on an unexpected result.
//!
//! Criterion 3 is known not to hold as stated: the border limit of the
//! trace construction is `f * (E_11 - E_22)`, not `f * E_11`. That line
//! prints FAIL and the run checks the behavior that does hold instead.

use std::time::Instant;

use rand::Rng;

use homlin::circuit::{Circuit, Predicate};
use homlin::families::{c_comb, c_count, c_matrix};
use homlin::matrixword::{
    compile_continuant_even, compile_continuant_odd, compile_offdiag3, compile_trace3, elementary, matrix_limit,
    minus_id, scale_matrix, Factor, MatrixWord, Target,
};
use homlin::poly::{Coeff, LinearForm, Polynomial, Var};
use homlin::random::{self, rng};
use homlin::transforms::{
    add_negcube, brent3, frontier, ihl_circuit, log_base, usum_holds, uvsum_holds, vf_to_v3p, vsbr3,
};
use homlin::verify::{audit_bounds, verify_border, BorderInput, BorderOpts, Metric};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn input_homogenization() -> Outcome {
    let mut r = rng(101);
    let mut worst = (0.0f64, 0.0f64);
    for i in 0..50 {
        let size = r.gen_range(3..=40);
        let c = random::affine_circuit(&mut r, size, 6, 6);
        let f = c.eval();
        let expect = &f - &Polynomial::constant(f.constant_term());
        let out = match ihl_circuit(&c) {
            Ok(o) => o,
            Err(e) => return outcome(false, format!("instance {}: {}", i, e)),
        };
        if out.eval() != expect {
            return outcome(false, format!("instance {}: value differs from f - f(0)", i));
        }
        let s = c.size();
        let audit = audit_bounds(&Metric::IhlCircuit { input_size: s, size: out.size(), depth: out.depth() });
        if !audit.pass {
            return outcome(false, format!("instance {}: {}", i, audit));
        }
        worst.0 = worst.0.max(out.size() as f64 / s as f64);
        worst.1 = worst.1.max(out.depth() as f64 / s as f64);
    }
    outcome(true, format!("50 circuits; max size/s = {:.2}, max depth/s = {:.2}", worst.0, worst.1))
}

fn ihl_formulas() -> Vec<Circuit> {
    let mut r = rng(202);
    (0..30).map(|_| random::ihl_formula(&mut r, 5, 4, 6)).collect()
}

fn offdiag() -> Outcome {
    let mut max_r = 0;
    for (i, c) in ihl_formulas().iter().enumerate() {
        let w = match compile_offdiag3(c, 0, 2, &Coeff::one()) {
            Ok(w) => w,
            Err(e) => return outcome(false, format!("instance {}: {}", i, e)),
        };
        if w.expand_minus_id() != elementary(3, 0, 2, c.eval()) {
            return outcome(false, format!("instance {}: product - id is not f*E_13", i));
        }
        let audit = audit_bounds(&Metric::Offdiag3 { depth: c.depth(), r: w.len() });
        if !audit.pass {
            return outcome(false, format!("instance {}: {}", i, audit));
        }
        max_r = max_r.max(w.len());
    }
    outcome(true, format!("30 formulas of depth <= 5; largest r = {}", max_r))
}

/// Returns the outcome for the criterion as stated and whether the
/// documented substitute (`f * (E_11 - E_22)`, entry (1,1) = f) holds.
fn trace_border() -> (Outcome, bool) {
    let mut stated = 0;
    let mut substitute = true;
    let mut entry_ok = 0;
    for c in ihl_formulas() {
        let f = c.eval();
        let w = match compile_trace3(&c) {
            Ok(w) => w,
            Err(_) => {
                substitute = false;
                continue;
            }
        };
        let lim = match matrix_limit(&scale_matrix(&minus_id(w.expand()), &w.scalar)) {
            Ok(m) => m,
            Err(_) => {
                substitute = false;
                continue;
            }
        };
        if lim == elementary(3, 0, 0, f.clone()) {
            stated += 1;
        }
        let mut diag = elementary(3, 0, 0, f.clone());
        diag[1][1] = -&f;
        substitute &= lim == diag;
        if verify_border(BorderInput::Word(&w), &f, BorderOpts::default()).pass {
            entry_ok += 1;
        }
    }
    substitute &= entry_ok == 30;
    let detail = format!(
        "limit equals f*E_11 for {}/30 formulas; limit is f*(E_11 - E_22) for all: {}; entry (1,1) border check passes {}/30",
        stated, substitute, entry_ok
    );
    (outcome(stated == 30, detail), substitute)
}

fn continuant_odd() -> Outcome {
    let mut r = rng(404);
    let mut max_r = 0;
    for i in 0..20 {
        let d = [1, 3, 5][i % 3];
        let budget = r.gen_range(1..=30);
        let c = random::graded_arity3_formula(&mut r, d, budget, 4);
        let f = c.eval();
        let run = || -> Result<_, String> {
            let (b, audit) = brent3(&c).map_err(|e| e.to_string())?;
            if !audit.all_ok() {
                return Err("brent3 audit failed".into());
            }
            let n = add_negcube(&b).map_err(|e| e.to_string())?;
            compile_continuant_odd(&n, d).map_err(|e| e.to_string())
        };
        let (proj, rep) = match run() {
            Ok(x) => x,
            Err(e) => return outcome(false, format!("instance {}: {}", i, e)),
        };
        let v = verify_border(BorderInput::Projection(&proj), &f, BorderOpts { degree: Some(d), ..Default::default() });
        if !v.pass {
            return outcome(false, format!("instance {} (d = {}): {}", i, d, v));
        }
        if !rep.within_bound() {
            return outcome(false, format!("instance {}: r = {} over 3^depth", i, rep.unpadded()));
        }
        max_r = max_r.max(rep.r);
    }
    outcome(true, format!("20 formulas, d in {{1,3,5}}; largest r = {}", max_r))
}

fn continuant_even() -> Outcome {
    let mut r = rng(505);
    let random4 = {
        let mut c;
        loop {
            c = random::ihl_formula(&mut r, 4, 4, 4);
            let f = c.eval();
            if f.degree() == Some(4) && f.is_homogeneous() {
                break;
            }
        }
        c
    };
    let fixtures = [
        ("x1*x2", Circuit::parse("shape formula\ngate a = input x1\ngate b = input x2\ngate m = mul a b\noutput m").unwrap()),
        ("x1^2", Circuit::parse("shape formula\ngate a = input x1\ngate b = input x1\ngate m = mul a b\noutput m").unwrap()),
        (
            "x1*x2 + x3*x4",
            Circuit::parse(
                "shape formula\ngate a = input x1\ngate b = input x2\ngate c = input x3\ngate d = input x4\n\
                 gate m = mul a b\ngate n = mul c d\ngate s = add m n\noutput s",
            )
            .unwrap(),
        ),
        ("random degree 4", random4),
    ];
    let mut sizes = Vec::new();
    for (name, c) in &fixtures {
        let f = c.eval();
        let d = f.degree().unwrap_or(0);
        let res = vf_to_v3p(c).map_err(|e| e.to_string()).and_then(|g| compile_continuant_even(&g, d).map_err(|e| e.to_string()));
        let (proj, _) = match res {
            Ok(x) => x,
            Err(e) => return outcome(false, format!("{}: {}", name, e)),
        };
        let v = verify_border(BorderInput::Projection(&proj), &f, BorderOpts { degree: Some(d), ..Default::default() });
        if !v.pass {
            return outcome(false, format!("{}: {}", name, v));
        }
        sizes.push(format!("{} r={}", name, proj.forms.len()));
    }
    outcome(true, sizes.join(", "))
}

fn brent_arity3() -> Outcome {
    let mut r = rng(606);
    let mut worst: f64 = 0.0;
    for i in 0..30 {
        let d = [3, 5, 7, 9][i % 4];
        let budget = r.gen_range(10..=200);
        let c = random::graded_arity3_formula(&mut r, d, budget, 5);
        let (out, audit) = match brent3(&c) {
            Ok(x) => x,
            Err(e) => return outcome(false, format!("instance {}: {}", i, e)),
        };
        let s = c.size();
        let lim = 2.0 * log_base(s as f64, 1.5) + 4.0;
        if out.eval() != c.eval() {
            return outcome(false, format!("instance {}: value changed", i));
        }
        if out.depth() as f64 > lim || !audit.all_ok() {
            return outcome(false, format!("instance {}: depth {} vs {:.2}, {}", i, out.depth(), lim, audit_bounds(&Metric::Brent3(&audit))));
        }
        worst = worst.max(out.depth() as f64 / lim);
    }
    outcome(true, format!("30 formulas up to size 200; max depth/bound = {:.2}", worst))
}

fn vsbr() -> Outcome {
    let mut r = rng(707);
    let mut circuits = Vec::new();
    let mut c_max: f64 = 0.0;
    for i in 0..20 {
        let c = random::homogeneous_arity3_circuit(&mut r, 60, 4, 7);
        let out = match vsbr3(&c) {
            Ok(o) => o,
            Err(e) => return outcome(false, format!("instance {}: {}", i, e)),
        };
        if out.circuit.eval() != c.eval() {
            return outcome(false, format!("instance {}: value changed", i));
        }
        if out.circuit.validate(Predicate::Arity3).is_err() || out.circuit.validate(Predicate::Ihl).is_err() {
            return outcome(false, format!("instance {}: output leaves the arity-3 IHL basis", i));
        }
        c_max = c_max.max(out.constant);
        circuits.push(c);
    }
    let mut checked = 0;
    let mut tries = 0;
    while checked < 100 && tries < 10_000 {
        tries += 1;
        let c = &circuits[r.gen_range(0..circuits.len())];
        let deg = c.degrees(false).unwrap();
        let u = r.gen_range(0..c.size());
        if deg[u] < 2 {
            continue;
        }
        let m = r.gen_range(1..deg[u]);
        if frontier(c, &deg, m).is_empty() {
            continue;
        }
        let lows: Vec<usize> = (0..c.size()).filter(|&v| deg[v] <= m).collect();
        let v = lows[r.gen_range(0..lows.len())];
        if !usum_holds(c, u, m) || !uvsum_holds(c, u, v, m) {
            return outcome(false, format!("identity fails at u = g{}, m = {}, v = g{}", u, m, v));
        }
        checked += 1;
    }
    outcome(checked == 100, format!("20 circuits; fitted c = {:.3}; {} (u, m, v) identity triples", c_max, checked))
}

fn vf() -> Outcome {
    let mut r = rng(808);
    for i in 0..30 {
        let c = random::affine_formula(&mut r, 4, 4, 5);
        let g = match vf_to_v3p(&c) {
            Ok(g) => g,
            Err(e) => return outcome(false, format!("instance {}: {}", i, e)),
        };
        if g.reassemble() != c.eval() {
            return outcome(false, format!("instance {}: reassembly differs", i));
        }
        if let Err(e) = g.validate() {
            return outcome(false, format!("instance {}: {}", i, e));
        }
    }
    outcome(true, "30 formulas reassemble exactly; all stored circuits validate")
}

fn family_oracles() -> Outcome {
    for n in 1..=9usize {
        for d in 1..=n as u32 {
            if c_comb(n, d) != c_matrix(n, d) {
                return outcome(false, format!("Ccomb({},{}) != Cmatrix", n, d));
            }
        }
    }
    let mut pairs = 0;
    for n in 2..=9usize {
        for d in 0..=n as u32 {
            if (n as u32 + d) % 2 == 1 {
                if c_comb(n, d) != c_comb(n - 1, d) {
                    return outcome(false, format!("C({},{}) != C({},{})", n, d, n - 1, d));
                }
                pairs += 1;
            }
        }
    }
    let count = c_comb(5, 3).len();
    outcome(count == 4 && c_count(5, 3) == 4, format!("45 oracle pairs, {} parity pairs, |C(5,3)| = {}", pairs, count))
}

fn fixtures() -> Outcome {
    let p = |s: &str| Polynomial::parse(s).unwrap();
    let cube = &(&p("x + y + z").pow(3) - &p("x + y - z").pow(3)) - &(&p("x - y + z").pow(3) - &p("x - y - z").pow(3));
    let cube_ok = cube == p("24*x*y*z");
    let (f, g) = (LinearForm::var(Var::new('f', &[])), LinearForm::var(Var::new('g', &[])));
    let neg = |l: &LinearForm| l.scale(&Coeff::int(-1));
    let w = MatrixWord::new(
        3,
        vec![Factor::single(0, 1, f.clone()), Factor::single(1, 2, g.clone()), Factor::single(0, 1, neg(&f)), Factor::single(1, 2, neg(&g))],
        Target::Entry(0, 2),
    );
    let four_ok = w.expand_minus_id() == elementary(3, 0, 2, p("f*g"));
    outcome(cube_ok && four_ok, format!("cube identity: {}, 4-factor identity: {}", cube_ok, four_ok))
}

fn main() {
    let mut unexpected = 0;
    let mut report = |n: usize, name: &str, start: Instant, o: &Outcome, expected_fail: bool| {
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {:>2} {:<28} {} ({:.2}s) {}", n, name, verdict, start.elapsed().as_secs_f64(), o.detail);
        if !o.pass && !expected_fail {
            unexpected += 1;
        }
    };
    let t = Instant::now();
    report(1, "input homogenization", t, &input_homogenization(), false);
    let t = Instant::now();
    report(2, "off-diagonal 3x3 word", t, &offdiag(), false);
    let t = Instant::now();
    let (o, substitute) = trace_border();
    report(3, "trace/border 3x3 word", t, &o, substitute);
    if !o.pass {
        println!("             known gap: the gadget limit is f*(E_11 - E_22); checked that instead: {}", substitute);
    }
    let t = Instant::now();
    report(4, "continuant, odd degree", t, &continuant_odd(), false);
    let t = Instant::now();
    report(5, "continuant, even degree", t, &continuant_even(), false);
    let t = Instant::now();
    report(6, "arity-3 Brent", t, &brent_arity3(), false);
    let t = Instant::now();
    report(7, "arity-3 VSBR", t, &vsbr(), false);
    let t = Instant::now();
    report(8, "formula to graded arity-3", t, &vf(), false);
    let t = Instant::now();
    report(9, "family oracles", t, &family_oracles(), false);
    let t = Instant::now();
    report(10, "identity fixtures", t, &fixtures(), false);
    if unexpected > 0 {
        eprintln!("{} criteria failed unexpectedly", unexpected);
        std::process::exit(1);
    }
}
