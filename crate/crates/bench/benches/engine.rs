use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use stickyflow::engine::simulate;
use stickyflow::scenario::{self, convert};
use stickyflow::{Domain, ParticleState, Rational};

fn engine(c: &mut Criterion) {
    let mut group = c.benchmark_group("simulate_free_line");
    for n in [16usize, 256, 1000] {
        let state = scenario::random_free_line(&mut scenario::rng(n as u64), n);
        group.bench_with_input(BenchmarkId::new("float64", n), &state, |b, s| {
            b.iter(|| simulate(black_box(s), &Domain::line(), None).unwrap())
        });
    }
    for n in [16usize, 64] {
        let state: ParticleState<Rational> = convert(&scenario::random_free_line(&mut scenario::rng(n as u64), n));
        group.bench_with_input(BenchmarkId::new("rational", n), &state, |b, s| {
            b.iter(|| simulate(black_box(s), &Domain::line(), None).unwrap())
        });
    }
    group.finish();

    let mut group = c.benchmark_group("simulate_unit_box");
    for n in [16usize, 256, 1000] {
        let state = scenario::random_box(&mut scenario::rng(n as u64), n);
        group.bench_with_input(BenchmarkId::new("float64", n), &state, |b, s| {
            b.iter(|| simulate(black_box(s), &Domain::unit_interval(), None).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, engine);
criterion_main!(benches);
