use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qpair_kraus::dynamics::concurrence_surface;
use qpair_kraus::exec::Exec;
use qpair_kraus::kraus::Picture;
use qpair_kraus::model::ModelParams;

fn grid(n: usize, hi: f64) -> Vec<f64> {
    (0..n).map(|k| hi * k as f64 / (n - 1) as f64).collect()
}

fn surface(c: &mut Criterion) {
    let base = ModelParams::default();
    let betas = grid(11, 100.0);
    let mut group = c.benchmark_group("concurrence_surface");
    group.sample_size(20);
    for steps in [20, 80] {
        let times = grid(steps, 0.01);
        for (name, exec) in [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)] {
            group.bench_with_input(BenchmarkId::new(name, betas.len() * steps), &times, |b, times| {
                b.iter(|| concurrence_surface(&base, black_box(&betas), black_box(times), Picture::Schrodinger, exec).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, surface);
criterion_main!(benches);
