use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use acpstep_core::frontend::load;
use acpstep_core::model::GroundProgram;
use acpstep_core::semantics::{enumerate_answer_sets, unfounded_sets};
use acpstep_core::Limits;

fn program(text: &str) -> GroundProgram {
    load(text, &Limits::default()).expect("bench program grounds").1.program
}

/// A positive ring `q1 <- q2 <- ... <- qn <- q1` with every atom also chosen.
fn ring(n: usize) -> String {
    let mut s = String::new();
    for k in 1..=n {
        let next = if k == n { 1 } else { k + 1 };
        s.push_str(&format!("q{k} :- q{next}.\n{{q{k}}}.\n"));
    }
    s
}

/// A free choice over `n` atoms with no two neighbours together.
fn independent_sets(n: usize) -> String {
    let heads: Vec<String> = (1..=n).map(|k| format!("q{k}")).collect();
    let mut s = format!("{{{}}}.\n", heads.join(";"));
    for k in 1..n {
        s.push_str(&format!(":- q{k}, q{}.\n", k + 1));
    }
    s
}

fn modes() -> [(&'static str, Limits); 2] {
    let base = Limits {
        atoms: 32,
        subsets: 32,
        unfounded: 1 << 24,
        ..Limits::default()
    };
    [("sequential", base.clone().sequential()), ("parallel", base)]
}

fn bench_unfounded(c: &mut Criterion) {
    let mut group = c.benchmark_group("unfounded_sets");
    group.sample_size(10);
    for n in [12, 16] {
        let p = program(&ring(n));
        let i = acpstep_core::model::Interpretation::from(p.universe().clone());
        for (name, limits) in modes() {
            group.bench_with_input(BenchmarkId::new(name, n), &n, |b, _| {
                b.iter(|| unfounded_sets(&p, &i, &limits).unwrap())
            });
        }
    }
    group.finish();
}

fn bench_enumerate(c: &mut Criterion) {
    let mut group = c.benchmark_group("enumerate_answer_sets");
    group.sample_size(10);
    for n in [12, 16] {
        let p = program(&independent_sets(n));
        for (name, limits) in modes() {
            group.bench_with_input(BenchmarkId::new(name, n), &n, |b, _| {
                b.iter(|| enumerate_answer_sets(&p, &limits).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(kernels, bench_unfounded, bench_enumerate);
criterion_main!(kernels);
