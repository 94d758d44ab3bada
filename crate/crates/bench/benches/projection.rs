use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use stickyflow::cone::{project_monotone, project_monotone_via_envelope};
use stickyflow::lagrangian::LagrangianSolution;
use stickyflow::scenario;
use stickyflow::StepFunction;

fn projection(c: &mut Criterion) {
    let mut group = c.benchmark_group("project_monotone");
    for n in [16usize, 256, 1000] {
        let state = scenario::random_free_line(&mut scenario::rng(n as u64), n);
        let sol = LagrangianSolution::from_state(&state).unwrap();
        let f: StepFunction<f64> = sol.n0.axpy(&1.0, &sol.v0);
        group.bench_with_input(BenchmarkId::new("pava", n), &f, |b, f| b.iter(|| project_monotone(black_box(f))));
        group.bench_with_input(BenchmarkId::new("envelope", n), &f, |b, f| {
            b.iter(|| project_monotone_via_envelope(black_box(f)))
        });
    }
    group.finish();

    let mut group = c.benchmark_group("solve_quantile");
    for n in [16usize, 256, 1000] {
        let state = scenario::random_free_line(&mut scenario::rng(n as u64), n);
        let sol = LagrangianSolution::from_state(&state).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &sol, |b, s| {
            b.iter(|| s.solve_quantile(black_box(&0.5)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, projection);
criterion_main!(benches);
