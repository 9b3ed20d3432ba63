//! System assembly and one preconditioned solve, on the parallel path and the
//! sequential path. With the `parallel` feature the sequential path is a
//! one-thread rayon pool; `cargo bench --no-default-features` measures the
//! fallback without rayon.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use grating_ddm::ddm::{assemble_system, Scheme, SystemConfig};
use grating_ddm::geometry::{GratingProfile, LayerStack, ProfileShape, QuasiPeriodicity};
use grating_ddm::krylov::GmresConfig;
use grating_ddm::solve::{solve_system, Preconditioner};
use std::f64::consts::TAU;
use std::hint::black_box;

fn stack(layers: usize) -> LayerStack {
    let profiles = (0..=layers)
        .map(|l| GratingProfile::new(-3.3 * l as f64, 0.1, ProfileShape::cosine(2.5), TAU).unwrap())
        .collect();
    let ks = (0..layers + 2).map(|l| l as f64 + 1.3).collect();
    LayerStack::new(profiles, ks, QuasiPeriodicity::new(0.0, TAU).unwrap())
}

fn workload(st: &LayerStack, cfg: &SystemConfig) -> usize {
    let sys = assemble_system(st, cfg).unwrap();
    let gmres = GmresConfig { rel_tol: 1e-6, max_iter: 500, restart: None };
    solve_system(&sys, &gmres, Preconditioner::Sweep).unwrap().1.iterations
}

fn bench_paths(c: &mut Criterion) {
    let mut group = c.benchmark_group("assemble_and_solve");
    group.sample_size(10);
    for (layers, n) in [(3usize, 32usize), (5, 64)] {
        let st = stack(layers);
        let cfg = SystemConfig::new(Scheme::LayerSlab, n);
        let label = format!("N={layers},n={n}");
        #[cfg(feature = "parallel")]
        {
            let threads = std::thread::available_parallelism().map(|t| t.get()).unwrap_or(1);
            let full = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
            group.bench_with_input(BenchmarkId::new(format!("parallel x{threads}"), &label), &st, |b, st| {
                b.iter(|| full.install(|| black_box(workload(st, &cfg))))
            });
            group.bench_with_input(BenchmarkId::new("sequential", &label), &st, |b, st| {
                b.iter(|| single.install(|| black_box(workload(st, &cfg))))
            });
        }
        #[cfg(not(feature = "parallel"))]
        group.bench_with_input(BenchmarkId::new("sequential", &label), &st, |b, st| {
            b.iter(|| black_box(workload(st, &cfg)))
        });
    }
    group.finish();
}

criterion_group!(benches, bench_paths);
criterion_main!(benches);
