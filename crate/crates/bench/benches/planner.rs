use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use ulacov::planner::{plan_parallel, plan_single, PlanRequest};
use ulacov::potentials::Constants;

fn plans(c: &mut Criterion) {
    let req = PlanRequest::new(Constants::new(1.0, 2.0, 16).unwrap(), 0.125, 0.05);
    c.bench_function("plan_single", |b| b.iter(|| plan_single(black_box(&req)).unwrap()));
    c.bench_function("plan_parallel", |b| b.iter(|| plan_parallel(black_box(&req)).unwrap()));
}

criterion_group!(benches, plans);
criterion_main!(benches);
