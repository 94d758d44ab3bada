use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use stickyflow::bombardment::{admissible_speed, energy_gap_series, run_recursion, BombardmentSpec};
use stickyflow::Rational;

fn bombardment(c: &mut Criterion) {
    let mut group = c.benchmark_group("bombardment_reference");
    group.sample_size(20);
    for k in [20usize, 60] {
        let spec = BombardmentSpec::reference(k);
        let a = admissible_speed(&spec).unwrap();
        // binary64 loses the speed to cancellation near k = 27
        if k <= 20 {
            group.bench_with_input(BenchmarkId::new("recursion_f64", k), &spec, |b, s| {
                b.iter(|| run_recursion::<f64>(black_box(s), &a).unwrap())
            });
        }
        group.bench_with_input(BenchmarkId::new("recursion_rational", k), &spec, |b, s| {
            b.iter(|| run_recursion::<Rational>(black_box(s), &a).unwrap())
        });
        let run = run_recursion::<Rational>(&spec, &a).unwrap();
        group.bench_with_input(BenchmarkId::new("gap_series", k), &spec, |b, s| {
            b.iter(|| energy_gap_series(black_box(s), &run).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bombardment);
criterion_main!(benches);
