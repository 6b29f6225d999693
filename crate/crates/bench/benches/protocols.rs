use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use erato_bench::{desk_config, simulated_history, split_view};
use erato_core::checker::check_atomicity_tagged;
use erato_core::harness::run_scenario;
use erato_core::views::{classify, iterative_analyze};
use erato_core::{Algorithm, QuorumSystem};

fn quorum_views(c: &mut Criterion) {
    let mut g = c.benchmark_group("quorum_views");
    for (name, qs) in [
        ("majority9", QuorumSystem::majority(9).unwrap()),
        ("matrix6x6", QuorumSystem::matrix(6, 6).unwrap()),
    ] {
        let view = split_view(&qs, 2);
        g.bench_with_input(BenchmarkId::new("classify", name), &view, |b, v| {
            b.iter(|| classify(&qs, black_box(v)).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("iterative", name), &view, |b, v| {
            b.iter(|| iterative_analyze(&qs, black_box(v)).unwrap())
        });
    }
    g.finish();
}

fn scenarios(c: &mut Criterion) {
    let mut g = c.benchmark_group("scenario_star9_r10");
    g.sample_size(10);
    for alg in [
        Algorithm::Erato,
        Algorithm::OhSam,
        Algorithm::Abd,
        Algorithm::EratoMw,
    ] {
        let cfg = desk_config(alg, 10);
        g.bench_function(alg.name(), |b| {
            b.iter(|| run_scenario(black_box(&cfg)).unwrap())
        });
    }
    g.finish();
}

fn checker(c: &mut Criterion) {
    let history = simulated_history(Algorithm::Erato, 20);
    c.bench_function("check_atomicity_tagged_r20", |b| {
        b.iter(|| check_atomicity_tagged(black_box(&history)).unwrap())
    });
}

criterion_group!(benches, quorum_views, scenarios, checker);
criterion_main!(benches);
