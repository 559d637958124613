//! Sequential against parallel execution of the per-order work: zero sets,
//! kernel builds and the residual sweep over modes.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nrbc_core::kernel::{build_kernels, BranchCutConfig, KernelParams};
use nrbc_core::oracle::{DirichletData, ResidualSetup};
use nrbc_core::specfun::{zero_sets, BesselOrder, DEFAULT_ZERO_TOL};
use nrbc_core::Execution;

const POLICIES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn zeros(c: &mut Criterion) {
    let orders: Vec<BesselOrder> = (0..=64).flat_map(|n| [BesselOrder::integer(n), BesselOrder::half(n)]).collect();
    let mut g = c.benchmark_group("zero_sets_n64");
    for (name, exec) in POLICIES {
        g.bench_function(name, |b| b.iter(|| zero_sets(&orders, DEFAULT_ZERO_TOL, exec).unwrap()));
    }
    g.finish();
}

fn kernels(c: &mut Criterion) {
    let cfg = BranchCutConfig::default();
    let mut g = c.benchmark_group("build_kernels");
    for d in [2u8, 3] {
        let params: Vec<KernelParams> = (0..=32).map(|n| KernelParams::new(d, n, 3.0, 5.0).unwrap()).collect();
        for (name, exec) in POLICIES {
            g.bench_with_input(BenchmarkId::new(name, format!("d{d}")), &params, |b, p| b.iter(|| build_kernels(p, &cfg, exec).unwrap()));
        }
    }
    g.finish();
}

fn residuals(c: &mut Criterion) {
    let cfg = BranchCutConfig::default();
    let data = DirichletData::standard(10.0 * std::f64::consts::PI, 2);
    let setup = ResidualSetup::new(&data, 32, 256, 2.75, 5.0, &cfg, Execution::default()).unwrap();
    let mut g = c.benchmark_group("residual_sweep_m32");
    g.sample_size(10);
    for (name, exec) in POLICIES {
        g.bench_function(name, |b| b.iter(|| setup.metrics(1.0, exec)));
    }
    g.finish();
}

criterion_group!(benches, zeros, kernels, residuals);
criterion_main!(benches);
