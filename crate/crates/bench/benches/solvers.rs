use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use wmms_core::canonical::run_greedy;
use wmms_core::rational::q;
use wmms_core::wmms::exact_wmms;
use wmms_core::{gen_canonical, gen_random, solve_12wmms, solve_polytime, CanonicalMode, RandomSpec, DEFAULT_BUDGET};

fn exact(c: &mut Criterion) {
    let mut group = c.benchmark_group("exact_wmms");
    for m in [6, 9, 12] {
        let inst = gen_random(17, 4, m, &RandomSpec::default()).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(m), &inst, |b, inst| {
            b.iter(|| exact_wmms(black_box(inst), 0, DEFAULT_BUDGET).unwrap())
        });
    }
    group.finish();
}

fn greedy(c: &mut Criterion) {
    let mut group = c.benchmark_group("greedy");
    for (n, m) in [(4, 32), (8, 64), (16, 256)] {
        let (inst, _) = gen_canonical(3, n, m, CanonicalMode::IndependentTiling, DEFAULT_BUDGET).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(format!("{n}x{m}")), &inst, |b, inst| {
            b.iter(|| run_greedy(black_box(inst)).unwrap())
        });
    }
    group.finish();
}

fn solvers(c: &mut Criterion) {
    let inst = gen_random(5, 3, 5, &RandomSpec::default()).unwrap();
    c.bench_function("solve_12wmms/3x5", |b| {
        b.iter(|| solve_12wmms(black_box(&inst), DEFAULT_BUDGET).unwrap())
    });
    let eps = q(1, 100);
    c.bench_function("solve_polytime/3x5", |b| {
        b.iter(|| solve_polytime(black_box(&inst), &eps, None, DEFAULT_BUDGET).unwrap())
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = exact, greedy, solvers
}
criterion_main!(benches);
