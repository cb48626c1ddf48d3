//! Sequential versus rayon execution of the trajectory ensembles.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use spinphase::direct::{estimate_observables_weighted, DirectConfig};
use spinphase::ensemble::Executor;
use spinphase::langevin::{run_ensemble, LangevinConfig};
use spinphase::model::build_rectangular_lattice;
use spinphase::observable::Observable;

fn executors() -> Vec<(&'static str, Executor)> {
    let mut list = vec![("sequential", Executor::Sequential)];
    if cfg!(feature = "parallel") {
        list.push(("parallel", Executor::Parallel { threads: None }));
    }
    list
}

fn langevin(c: &mut Criterion) {
    let graph = build_rectangular_lattice(10, 10, 1.0, 0.0, true).unwrap();
    let mut group = c.benchmark_group("langevin_10x10");
    group.sample_size(10);
    for (name, executor) in executors() {
        let config = LangevinConfig {
            beta: 0.4,
            trajectories: 64,
            burn_in: 1.0,
            total_tau: 5.0,
            executor,
            ..LangevinConfig::default()
        };
        group.bench_with_input(BenchmarkId::from_parameter(name), &config, |b, config| {
            b.iter(|| run_ensemble(&graph, config, &[Observable::NearestNeighbour]).unwrap())
        });
    }
    group.finish();
}

fn direct(c: &mut Criterion) {
    let graph = build_rectangular_lattice(10, 10, 1.0, 0.0, true).unwrap();
    let mut group = c.benchmark_group("direct_10x10");
    group.sample_size(10);
    for (name, executor) in executors() {
        let config = DirectConfig { trajectories: 50_000, seed: 1, executor };
        group.bench_with_input(BenchmarkId::from_parameter(name), &config, |b, config| {
            b.iter(|| estimate_observables_weighted(&graph, 0.3, config, &[Observable::NearestNeighbour]).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, langevin, direct);
criterion_main!(benches);
