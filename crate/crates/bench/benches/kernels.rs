use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crn_bench::bench_topology;
use crn_core::games::random_profile;
use crn_core::learning::{fs_update, hm_update};
use crn_core::phy::sinr_all;
use crn_core::{best_response, ga_optimize, CapacityMode, GaConfig, GameSpec};

fn sinr(c: &mut Criterion) {
    let mut group = c.benchmark_group("sinr_all");
    for links in [10, 30, 60] {
        let topo = bench_topology(links, 1);
        let profile = random_profile(&topo, &mut ChaCha8Rng::seed_from_u64(2));
        group.bench_with_input(BenchmarkId::from_parameter(links), &links, |b, _| {
            b.iter(|| sinr_all(black_box(&profile), &topo))
        });
    }
    group.finish();
}

fn best_responses(c: &mut Criterion) {
    let topo = bench_topology(30, 1);
    let profile = random_profile(&topo, &mut ChaCha8Rng::seed_from_u64(3));
    let mut group = c.benchmark_group("best_response");
    for (name, spec) in [
        ("local_dc", GameSpec::local(CapacityMode::discrete(), 10.0)),
        ("potential_dc", GameSpec::potential(CapacityMode::discrete(), 10.0)),
    ] {
        group.bench_function(name, |b| b.iter(|| best_response(black_box(7), &profile, &topo, &spec)));
    }
    group.finish();
}

fn learner_updates(c: &mut Criterion) {
    let utilities: Vec<f64> = (0..49).map(|k| (k % 7) as f64 - 1.0).collect();
    c.bench_function("fs_update_49", |b| {
        let mut cum = vec![0.0; 49];
        b.iter(|| fs_update(&mut cum, black_box(&utilities), 0.1).unwrap())
    });
    c.bench_function("hm_update_49", |b| {
        let mut cum = vec![0.0; 49];
        b.iter(|| hm_update(&mut cum, black_box(&utilities), 3).unwrap())
    });
}

fn ga_generation(c: &mut Criterion) {
    let topo = bench_topology(30, 1);
    let cfg = GaConfig { max_generations: 1, stall_generations: 1, ..GaConfig::desk() };
    c.bench_function("ga_one_generation_30_links", |b| {
        b.iter(|| ga_optimize(&topo, CapacityMode::discrete(), 10.0, black_box(&cfg)).unwrap())
    });
}

criterion_group!(benches, sinr, best_responses, learner_updates, ga_generation);
criterion_main!(benches);
