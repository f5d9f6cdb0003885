use criterion::{black_box, criterion_group, criterion_main, Criterion};
use nsq_core::engine::{run, EngineConfig};
use nsq_core::numerics::logsumexp;
use nsq_core::problems::uniform_identity_problem;
use nsq_core::samplers::SamplerConfig;

fn bench_logsumexp(c: &mut Criterion) {
    let terms: Vec<f64> = (0..10_000).map(|i| -(i as f64) * 0.01).collect();
    c.bench_function("logsumexp_10k", |b| {
        b.iter(|| logsumexp(black_box(&terms)).unwrap())
    });
}

fn bench_engine(c: &mut Criterion) {
    let problem = uniform_identity_problem(0.9);
    c.bench_function("engine_uniform_j25_n500", |b| {
        b.iter(|| {
            run(
                &problem,
                &EngineConfig::new(25, 500, SamplerConfig::default_slice(), black_box(7)),
            )
            .unwrap()
        })
    });
}

criterion_group!(benches, bench_logsumexp, bench_engine);
criterion_main!(benches);
