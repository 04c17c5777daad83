//! Seeded generators for test formulas and circuits.
//!
//! All generators draw from a [`ChaCha8Rng`], so a seed fixes the output on
//! every platform.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::circuit::tree::{self, add, leaf, mul, mul3, Formula};
use crate::circuit::{Basis, Builder, Circuit, Gate, Shape};
use crate::poly::{Coeff, LinearForm, Var};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn small_coeff(r: &mut impl Rng) -> Coeff {
    const CHOICES: [(i64, i64); 7] = [(1, 1), (1, 1), (-1, 1), (2, 1), (-2, 1), (3, 1), (1, 2)];
    let (n, d) = *CHOICES.choose(r).unwrap();
    Coeff::rational(n, d)
}

/// A nonzero homogeneous linear form with one or two terms over `x1..xn`.
pub fn linear_form(r: &mut impl Rng, n: u64) -> LinearForm {
    let mut f = LinearForm::zero();
    while f.is_zero() {
        for _ in 0..r.gen_range(1..=2) {
            f.add_term(Var::x(r.gen_range(1..=n)), &small_coeff(r));
        }
    }
    f
}

/// Random arity-2 circuit with affine leaves, rational constants and some
/// scaled sums. `size` counts gates; degrees stay at most `max_deg`.
pub fn affine_circuit(r: &mut impl Rng, size: usize, nvars: u64, max_deg: u32) -> Circuit {
    let size = size.max(1);
    let mut b = Builder::new();
    let mut deg: Vec<u32> = Vec::new();
    let leaves = (size / 3).clamp(1, 8).min(size);
    for _ in 0..leaves {
        let form = if r.gen_bool(0.8) { linear_form(r, nvars) } else { LinearForm::zero() };
        let constant = if r.gen_bool(0.6) {
            Coeff::rational(r.gen_range(-5..=5), r.gen_range(1..=3))
        } else {
            Coeff::zero()
        };
        b.push(Gate::Input { form, constant });
        deg.push(1);
    }
    while b.gates.len() < size {
        let n = b.gates.len();
        let (a, c) = (pick(r, n), pick(r, n));
        let mul_ok = deg[a] + deg[c] <= max_deg;
        if mul_ok && r.gen_bool(0.4) {
            b.mul(a, c);
            deg.push(deg[a] + deg[c]);
        } else if r.gen_bool(0.2) {
            b.add_scaled(a, c, small_coeff(r), small_coeff(r));
            deg.push(deg[a].max(deg[c]));
        } else {
            b.add(a, c);
            deg.push(deg[a].max(deg[c]));
        }
    }
    let out = b.gates.len() - 1;
    b.finish(out, Shape::Circuit, Basis::Arity2).expect("generated circuit is well formed")
}

/// A gate index, biased towards recent gates so the output depends on most
/// of the circuit.
fn pick(r: &mut impl Rng, n: usize) -> usize {
    if r.gen_bool(0.5) {
        n - 1 - r.gen_range(0..n.min(3))
    } else {
        r.gen_range(0..n)
    }
}

/// IHL arity-2 formula of depth at most `depth` and degree at most `max_deg`.
pub fn ihl_formula(r: &mut impl Rng, depth: usize, nvars: u64, max_deg: u32) -> Circuit {
    fn go(r: &mut impl Rng, depth: usize, nvars: u64, max_deg: u32) -> (Formula, u32) {
        if depth == 0 || r.gen_bool(0.15) {
            return (leaf(linear_form(r, nvars)), 1);
        }
        if max_deg >= 2 && r.gen_bool(0.45) {
            let left = r.gen_range(1..max_deg);
            let (a, da) = go(r, depth - 1, nvars, left);
            let (b, db) = go(r, depth - 1, nvars, max_deg - da);
            (mul(a, b), da + db)
        } else {
            let (a, da) = go(r, depth - 1, nvars, max_deg);
            let (b, db) = go(r, depth - 1, nvars, max_deg);
            (add(a, b), da.max(db))
        }
    }
    let (f, _) = go(r, depth, nvars, max_deg.max(1));
    tree::to_circuit(&f, Shape::Formula, Basis::Arity2).expect("generated formula is well formed")
}

/// General arity-2 formula with affine leaves.
pub fn affine_formula(r: &mut impl Rng, depth: usize, nvars: u64, max_deg: u32) -> Circuit {
    fn go(r: &mut impl Rng, depth: usize, nvars: u64, max_deg: u32) -> (Formula, u32) {
        if depth == 0 || r.gen_bool(0.2) {
            let form = if r.gen_bool(0.85) { linear_form(r, nvars) } else { LinearForm::zero() };
            let c = if r.gen_bool(0.5) { Coeff::int(r.gen_range(-3..=3)) } else { Coeff::zero() };
            return (tree::input(form, c), 1);
        }
        if max_deg >= 2 && r.gen_bool(0.45) {
            let left = r.gen_range(1..max_deg);
            let (a, da) = go(r, depth - 1, nvars, left);
            let (b, db) = go(r, depth - 1, nvars, max_deg - da);
            (mul(a, b), da + db)
        } else {
            let (a, da) = go(r, depth - 1, nvars, max_deg);
            let (b, db) = go(r, depth - 1, nvars, max_deg);
            (add(a, b), da.max(db))
        }
    }
    let (f, _) = go(r, depth, nvars, max_deg.max(1));
    tree::to_circuit(&f, Shape::Formula, Basis::Arity2).expect("generated formula is well formed")
}

/// Fewest nodes of a graded arity-3 formula of odd degree `d`.
fn min_size(d: u32) -> usize {
    (d + (d - 1) / 2) as usize
}

/// Three odd parts summing to the odd degree `d >= 3`.
fn odd_split(r: &mut impl Rng, d: u32) -> [u32; 3] {
    let units = (d - 3) / 2;
    let mut parts = [0u32; 3];
    for _ in 0..units {
        parts[r.gen_range(0..3)] += 1;
    }
    parts.map(|p| 2 * p + 1)
}

/// Graded arity-3 IHL formula computing a homogeneous polynomial of odd
/// degree `d`, with at most `budget` nodes (at least the minimum for `d`).
pub fn graded_arity3_formula(r: &mut impl Rng, d: u32, budget: usize, nvars: u64) -> Circuit {
    assert!(d % 2 == 1, "arity-3 formulas have odd degree");
    fn go(r: &mut impl Rng, d: u32, budget: usize, nvars: u64) -> Formula {
        let need = min_size(d);
        let budget = budget.max(need);
        let spare = budget - need;
        if spare > need && r.gen_bool(0.4) {
            let inner = budget - 1;
            let left = r.gen_range(need..=inner - need);
            return add(go(r, d, left, nvars), go(r, d, inner - left, nvars));
        }
        if d == 1 {
            return leaf(linear_form(r, nvars));
        }
        let parts = odd_split(r, d);
        let mut extra = budget - 1 - parts.iter().map(|&p| min_size(p)).sum::<usize>();
        let mut kids = Vec::with_capacity(3);
        for (i, &p) in parts.iter().enumerate() {
            let give = if i == 2 { extra } else { r.gen_range(0..=extra) };
            extra -= give;
            kids.push(go(r, p, min_size(p) + give, nvars));
        }
        let c = kids.pop().unwrap();
        let b = kids.pop().unwrap();
        let a = kids.pop().unwrap();
        mul3(a, b, c)
    }
    let f = go(r, d, budget, nvars);
    tree::to_circuit(&f, Shape::Formula, Basis::Arity3).expect("generated formula is well formed")
}

/// Left comb `(((x1*a*b)*c*d)...)` with `n` products.
pub fn mul3_comb(n: usize) -> Circuit {
    let mut f = tree::var(Var::x(1));
    for i in 0..n as u64 {
        f = mul3(f, tree::var(Var::x(i % 4 + 2)), tree::var(Var::x(i % 3 + 1)));
    }
    tree::to_circuit(&f, Shape::Formula, Basis::Arity3).expect("comb is well formed")
}

/// Homogeneous arity-3 IHL circuit (a DAG) of odd degree at most `max_deg`
/// with at most `size` gates before pruning. The output is a gate of the
/// largest degree built.
pub fn homogeneous_arity3_circuit(r: &mut impl Rng, size: usize, nvars: u64, max_deg: u32) -> Circuit {
    let mut b = Builder::new();
    let mut deg: Vec<u32> = Vec::new();
    let leaves = (size / 4).clamp(2, 6);
    for _ in 0..leaves {
        b.leaf(linear_form(r, nvars));
        deg.push(1);
    }
    let by_deg = |deg: &[u32], d: u32| -> Vec<usize> { (0..deg.len()).filter(|&i| deg[i] == d).collect() };
    let mut attempts = 0;
    while b.gates.len() < size && attempts < 10 * size {
        attempts += 1;
        let n = b.gates.len();
        if r.gen_bool(0.45) {
            let a = r.gen_range(0..n);
            let same = by_deg(&deg, deg[a]);
            let c = *same.choose(r).unwrap();
            b.add(a, c);
            deg.push(deg[a]);
        } else {
            let kids: Vec<usize> = (0..3).map(|_| r.gen_range(0..n)).collect();
            let d: u32 = kids.iter().map(|&k| deg[k]).sum();
            if d > max_deg {
                continue;
            }
            b.mul3(kids[0], kids[1], kids[2]);
            deg.push(d);
        }
    }
    let top = *deg.iter().max().unwrap();
    let out = (0..deg.len()).rev().find(|&i| deg[i] == top).unwrap();
    b.finish(out, Shape::Circuit, Basis::Arity3).expect("generated circuit is well formed").pruned()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Predicate;

    #[test]
    fn seeds_are_reproducible() {
        let a = affine_circuit(&mut rng(7), 30, 5, 6);
        let b = affine_circuit(&mut rng(7), 30, 5, 6);
        assert_eq!(a, b);
        assert_eq!(a.size(), 30);
    }

    #[test]
    fn ihl_formulas_respect_limits() {
        let mut r = rng(1);
        for _ in 0..40 {
            let c = ihl_formula(&mut r, 5, 4, 6);
            assert!(c.depth() <= 5);
            assert!(c.validate(Predicate::Ihl).is_ok());
            assert!(c.validate(Predicate::FormulaTree).is_ok());
            assert!(c.eval().degree().unwrap_or(0) <= 6);
        }
    }

    #[test]
    fn graded_formulas_are_graded() {
        let mut r = rng(2);
        for d in [1, 3, 5, 7] {
            for budget in [5, 30, 120] {
                let c = graded_arity3_formula(&mut r, d, budget, 4);
                assert!(c.size() <= budget.max(min_size(d)), "{} > {}", c.size(), budget);
                assert!(c.validate(Predicate::Graded).is_ok());
                assert!(c.validate(Predicate::Arity3).is_ok());
                let p = c.eval();
                assert!(p.is_zero() || p.degree() == Some(d));
            }
        }
    }

    #[test]
    fn homogeneous_circuits() {
        let mut r = rng(3);
        for _ in 0..20 {
            let c = homogeneous_arity3_circuit(&mut r, 60, 4, 7);
            assert!(c.size() <= 60);
            assert!(c.degrees(true).is_ok());
            assert!(c.validate(Predicate::Ihl).is_ok());
        }
    }
}
