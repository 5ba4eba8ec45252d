//! Throughput of the two data-parallel hot paths, pinned against a
//! single-thread baseline. With the `parallel` feature (default) the same
//! closure runs inside a one-thread rayon pool and the process-wide pool,
//! so the reported ratio is the parallel speedup on this machine. Built
//! with `--no-default-features` only the sequential fallback exists and is
//! benched alone.

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use squeezesim::analysis::wigner_grid;
use squeezesim::model::{CouplingSidebands, SystemParams};
use squeezesim::optimize::sweep_ratio;

fn ratio_sweep_work() -> f64 {
    let p = SystemParams::default();
    let grid: Vec<f64> = (0..64).map(|i| 0.995 * i as f64 / 63.0).collect();
    let sweep = sweep_ratio(&p, 0.1, p.n_m, &grid).unwrap();
    sweep.variance.iter().sum()
}

fn wigner_work() -> f64 {
    let p = SystemParams::default();
    let c = CouplingSidebands::from_ratio(0.1, 0.5);
    let block = squeezesim::covariance::steady_cm_for(&c, &p).unwrap().mech_block();
    let w = 6.0 * block[(1, 1)].sqrt();
    let grid = wigner_grid(&block, (-w, w), (-w, w), 301).unwrap();
    grid.mass()
}

fn bench_pair(c: &mut Criterion, name: &str, work: fn() -> f64) {
    let mut group = c.benchmark_group(name);
    group.sample_size(10);

    #[cfg(feature = "parallel")]
    {
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        group.bench_function("sequential", |b| {
            b.iter(|| single.install(|| black_box(work())))
        });
        group.bench_function("parallel", |b| b.iter(|| black_box(work())));
    }

    #[cfg(not(feature = "parallel"))]
    group.bench_function("sequential", |b| b.iter(|| black_box(work())));

    group.finish();
}

fn benches(c: &mut Criterion) {
    bench_pair(c, "ratio_sweep_64", ratio_sweep_work);
    bench_pair(c, "wigner_301x301", wigner_work);
}

criterion_group!(benches_group, benches);
criterion_main!(benches_group);
