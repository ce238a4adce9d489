use criterion::{criterion_group, criterion_main, Criterion};
use mec_bench::uneven_slot;
use mec_core::{
    allocate_bandwidth, optimal_tx_power, run, solve_slot, solve_slot_even, Policy, SolverSettings,
    SystemConfig,
};
use std::hint::black_box;

fn per_slot(c: &mut Criterion) {
    let cfg = SystemConfig::reference();
    let settings = SolverSettings::default();
    let (q, gain) = uneven_slot(&cfg);
    let share = 1.0 / cfg.num_servers as f64;
    let power: Vec<f64> = (0..cfg.num_servers)
        .map(|k| optimal_tx_power(q[k], share, gain[k], k, &cfg).unwrap())
        .collect();

    c.bench_function("solve_slot K=7", |b| {
        b.iter(|| solve_slot(black_box(&q), black_box(&gain), &cfg, &settings).unwrap())
    });
    c.bench_function("solve_slot_even K=7", |b| {
        b.iter(|| solve_slot_even(black_box(&q), black_box(&gain), &cfg, &settings).unwrap())
    });
    c.bench_function("allocate_bandwidth K=7", |b| {
        b.iter(|| allocate_bandwidth(black_box(&q), &power, &gain, &cfg, &settings).unwrap())
    });
}

fn short_run(c: &mut Criterion) {
    let mut cfg = SystemConfig::reference();
    cfg.horizon = 500;
    let settings = SolverSettings::default();
    let mut group = c.benchmark_group("run 500 slots");
    group.sample_size(10);
    for policy in Policy::ALL {
        group.bench_function(policy.to_string(), |b| {
            b.iter(|| run(&cfg, policy, &settings).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, per_slot, short_run);
criterion_main!(benches);
