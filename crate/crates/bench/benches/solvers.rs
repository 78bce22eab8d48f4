use advrisk_core::model::AsymptoticConfig;
use advrisk_core::pareto::{lambda_to_epsilon, pareto_fixed_point};
use advrisk_core::saddle::{solve_saddle, tau_star};
use advrisk_core::simulate::{generate_instance, train_adversarial, SeededRng};
use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

fn cfg(delta: f64, eps_train: f64) -> AsymptoticConfig {
    AsymptoticConfig::new(delta, 1.0, 1.0, eps_train, 0.5).unwrap()
}

fn bench_tau_star(c: &mut Criterion) {
    c.bench_function("tau_star a=1.3", |b| {
        b.iter(|| tau_star(black_box(1.3), black_box(1.0), black_box(0.7)).unwrap())
    });
}

fn bench_pareto(c: &mut Criterion) {
    let config = cfg(2.0, 0.0);
    c.bench_function("pareto_fixed_point lambda=1", |b| {
        b.iter(|| pareto_fixed_point(black_box(1.0), &config).unwrap())
    });
    c.bench_function("lambda_to_epsilon lambda=1", |b| {
        b.iter(|| lambda_to_epsilon(black_box(1.0), &config).unwrap())
    });
}

fn bench_saddle(c: &mut Criterion) {
    let config = cfg(2.0, 0.5);
    c.bench_function("solve_saddle delta=2 eps=0.5", |b| {
        b.iter(|| solve_saddle(black_box(&config)).unwrap())
    });
    let wide = cfg(20.0, 0.3);
    c.bench_function("solve_saddle delta=20 eps=0.3", |b| {
        b.iter(|| solve_saddle(black_box(&wide)).unwrap())
    });
}

fn bench_train(c: &mut Criterion) {
    let config = cfg(2.0, 0.5);
    let mut rng = SeededRng::new(1).replicate(0);
    let inst = generate_instance(200, 100, &config, &mut rng);
    c.bench_function("train_adversarial p=100", |b| {
        b.iter(|| train_adversarial(black_box(&inst), 0.5, 1e-5, 200_000).unwrap())
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = bench_tau_star, bench_pareto, bench_saddle, bench_train
}
criterion_main!(benches);
