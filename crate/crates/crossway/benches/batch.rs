//! Sequential vs. data-parallel batch execution on the sampled-case family.
//!
//! Run with `cargo bench -p crossway`.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use crossway::batch::{run_batch_parallel, run_batch_sequential};
use crossway::experiments::gen_uniform_cases;
use crossway::sim::ScenarioSpec;

fn bench_batch(c: &mut Criterion) {
    let mut group = c.benchmark_group("uniform_batch");
    group.sample_size(10);

    for &n in &[16usize, 64] {
        let specs: Vec<ScenarioSpec> =
            gen_uniform_cases(n, 1234).into_iter().map(|c| c.spec).collect();
        group.bench_with_input(BenchmarkId::new("sequential", n), &specs, |b, specs| {
            b.iter(|| run_batch_sequential(specs))
        });
        group.bench_with_input(BenchmarkId::new("parallel", n), &specs, |b, specs| {
            b.iter(|| run_batch_parallel(specs))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_batch);
criterion_main!(benches);
