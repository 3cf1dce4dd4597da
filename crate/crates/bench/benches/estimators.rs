use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use ulacov::estimators::MomentAccumulator;
use ulacov::oracles::{ar1_lambda_max, Ar1Spec};
use ulacov_bench::test_matrix;

fn accumulate(c: &mut Criterion) {
    let rows: Vec<Vec<f64>> = (0..10_000).map(|i| (0..8).map(|j| ((i * 7 + j) % 23) as f64).collect()).collect();
    c.bench_function("moment_accumulator_10k_x8", |b| {
        b.iter(|| {
            let mut acc = MomentAccumulator::new(8);
            for r in &rows {
                acc.push(black_box(r));
            }
            acc.finish().unwrap()
        })
    });
}

fn operator_norm(c: &mut Criterion) {
    let mut g = c.benchmark_group("operator_norm");
    for dim in [16usize, 64, 128] {
        let a = test_matrix(dim);
        g.bench_with_input(BenchmarkId::from_parameter(dim), &dim, |b, _| {
            b.iter(|| black_box(&a).operator_norm(1e-10).unwrap())
        });
    }
    g.finish();
}

fn ar1(c: &mut Criterion) {
    let mut g = c.benchmark_group("ar1_lambda_max");
    g.sample_size(10);
    for n in [64usize, 256] {
        let spec = Ar1Spec::from_ula(1.0, 0.1, n).unwrap();
        g.bench_with_input(BenchmarkId::from_parameter(n), &spec, |b, s| b.iter(|| ar1_lambda_max(s).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, accumulate, operator_norm, ar1);
criterion_main!(benches);
