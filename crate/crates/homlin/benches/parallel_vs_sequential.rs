use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use homlin::matrixword::continuant::word2;
use homlin::matrixword::{compile_trace3, ExpandOpts};
use homlin::par::Exec;
use homlin::poly::LinearForm;
use homlin::random::{self, rng};
use homlin::verify::{run_jobs, verify_random};
use homlin::poly::{Field, DEFAULT_PRIME};

const EXECS: [(&str, Exec); 2] = [("parallel", Exec::Parallel), ("sequential", Exec::Sequential)];

fn word_expansion(c: &mut Criterion) {
    let mut g = c.benchmark_group("word2_expand");
    g.sample_size(10);
    for len in [64usize, 256, 1024] {
        let mut r = rng(len as u64);
        let forms: Vec<LinearForm> = (0..len).map(|_| random::linear_form(&mut r, 6)).collect();
        let w = word2(&forms, true);
        for (name, exec) in EXECS {
            g.bench_with_input(BenchmarkId::new(name, len), &w, |b, w| {
                b.iter(|| black_box(w.expand_with(ExpandOpts { exec, max_deg: Some(3) })))
            });
        }
    }
    g.finish();
}

fn trace_expansion(c: &mut Criterion) {
    let mut g = c.benchmark_group("trace3_expand");
    g.sample_size(10);
    let f = random::ihl_formula(&mut rng(3), 4, 4, 4);
    let w = compile_trace3(&f).unwrap();
    for (name, exec) in EXECS {
        g.bench_function(BenchmarkId::new(name, w.len()), |b| {
            b.iter(|| black_box(w.expand_with(ExpandOpts { exec, max_deg: None })))
        });
    }
    g.finish();
}

fn verification_jobs(c: &mut Criterion) {
    let mut g = c.benchmark_group("random_verify_jobs");
    g.sample_size(10);
    let mut r = rng(9);
    let jobs: Vec<_> = (0..32)
        .map(|_| {
            let f = random::affine_formula(&mut r, 5, 5, 6).eval();
            (f.clone(), f)
        })
        .collect();
    for (name, exec) in EXECS {
        g.bench_function(name, |b| {
            b.iter(|| {
                run_jobs(exec, &jobs, |(a, b)| verify_random(a, b, 20, Field::Prime(DEFAULT_PRIME), 1))
            })
        });
    }
    g.finish();
}

criterion_group!(benches, word_expansion, trace_expansion, verification_jobs);
criterion_main!(benches);
