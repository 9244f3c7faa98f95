//! Hot kernels under the compiled backend. Run once with default features
//! (rayon) and once with `--no-default-features` (sequential); the group
//! names carry the backend so both sets of results sit side by side.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use pairwave::analytic::initial_state;
use pairwave::dynamics::{default_step, evolve_master, LindbladSet, MasterGenerator};
use pairwave::hamiltonian::build_full;
use pairwave::model::SystemSpec;
use pairwave::par;
use pairwave::quantum::density_from_ket;
use pairwave::sweep::{sweep_grid, Param, Scenario, SweepAxis};

fn backend() -> &'static str {
    if par::is_parallel() {
        "rayon"
    } else {
        "sequential"
    }
}

fn worker_counts() -> Vec<usize> {
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    if par::is_parallel() && cores > 1 {
        vec![1, cores]
    } else {
        vec![1]
    }
}

fn master_rhs(c: &mut Criterion) {
    let mut group = c.benchmark_group(format!("master_rhs/{}", backend()));
    for n_max in [1, 2] {
        let mut spec = SystemSpec::reference(11.0).unwrap();
        spec.n_max = n_max;
        let h = build_full(&spec).unwrap();
        let lindblad = LindbladSet::from_spec(&spec).unwrap();
        let rho = density_from_ket(&initial_state(&spec).unwrap()).into_vec();
        let mut gen = MasterGenerator::new(&h, &lindblad).unwrap();
        let mut out = vec![rho[0]; rho.len()];
        for workers in worker_counts() {
            let id = BenchmarkId::new(format!("d{}", h.dim()), format!("{workers}w"));
            group.bench_function(id, |b| {
                par::with_workers(workers, || b.iter(|| gen.apply(1.0, &rho, &mut out)))
            });
        }
    }
    group.finish();
}

fn master_steps(c: &mut Criterion) {
    let mut group = c.benchmark_group(format!("rk4_50_steps/{}", backend()));
    group.sample_size(10);
    let spec = SystemSpec::reference(11.0).unwrap();
    let h = build_full(&spec).unwrap();
    let lindblad = LindbladSet::from_spec(&spec).unwrap();
    let rho0 = density_from_ket(&initial_state(&spec).unwrap());
    let dt = default_step(&h);
    for workers in worker_counts() {
        group.bench_function(format!("d243/{workers}w"), |b| {
            par::with_workers(workers, || b.iter(|| evolve_master(&h, &lindblad, &rho0, 50.0 * dt, dt).unwrap()))
        });
    }
    group.finish();
}

fn small_sweep(c: &mut Criterion) {
    let mut group = c.benchmark_group(format!("sweep_2x3_closed/{}", backend()));
    group.sample_size(10);
    let mut spec = SystemSpec::reference(11.0).unwrap();
    spec.n_max = 1;
    spec.include_dissipation = false;
    let scenario = Scenario::new(spec);
    let axes = vec![
        SweepAxis::list(Param::GcsRatio, vec![0.0, 0.4]).unwrap(),
        SweepAxis::list(Param::C1, vec![10.0, 11.0, 12.0]).unwrap(),
    ];
    for workers in worker_counts() {
        group.bench_function(format!("{workers}w"), |b| b.iter(|| sweep_grid(&scenario, &axes, workers).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, master_rhs, master_steps, small_sweep);
criterion_main!(benches);
