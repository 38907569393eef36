use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use tunnel_core::packet::{PacketEngine, PacketSpec, XGrid};
use tunnel_core::par::Execution;
use tunnel_core::scattering::sweep;
use tunnel_core::{BarrierSpec, ParticleSpec};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn snapshot(c: &mut Criterion) {
    let p = ParticleSpec::gaas();
    let b = BarrierSpec::new(0.25, 0.5, 60.0, &p).unwrap();
    let spec = PacketSpec::new(10.0, 0.0, 1.2).unwrap().with_grid(1024, 6.0).unwrap();
    let grid = XGrid::new(-150.0, 250.0, 4096).unwrap();
    let mut group = c.benchmark_group("snapshot");
    group.sample_size(10);
    for (name, exec) in MODES {
        let engine = PacketEngine::new(&spec, &b.potential(), &p, exec).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(name), &engine, |bch, e| {
            bch.iter(|| black_box(e.snapshot_on(black_box(0.1), &grid)))
        });
    }
    group.finish();
}

fn engine_setup(c: &mut Criterion) {
    let p = ParticleSpec::gaas();
    let b = BarrierSpec::new(0.25, 0.5, 60.0, &p).unwrap();
    let spec = PacketSpec::new(10.0, 0.0, 1.2).unwrap();
    let mut group = c.benchmark_group("engine_setup");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(name, |bch| {
            bch.iter(|| black_box(PacketEngine::new(&spec, &b.potential(), &p, exec).unwrap()))
        });
    }
    group.finish();
}

fn k_sweep(c: &mut Criterion) {
    let p = ParticleSpec::gaas();
    let pot = BarrierSpec::new(0.25, 0.5, 0.0, &p).unwrap().potential();
    let ks: Vec<f64> = (1..=20_000).map(|i| i as f64 * 2.5e-4).collect();
    let mut group = c.benchmark_group("k_sweep");
    for (name, exec) in MODES {
        group.bench_function(name, |bch| bch.iter(|| black_box(sweep(&pot, &p, &ks, exec).unwrap())));
    }
    group.finish();
}

criterion_group!(benches, snapshot, engine_setup, k_sweep);
criterion_main!(benches);
