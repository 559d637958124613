//! Recursive exponential convolution against the direct O(N^2) quadrature.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use nrbc_core::convolution::{direct_convolution, KernelConvolver};
use nrbc_core::kernel::{build_kernel, BranchCutConfig, KernelParams};

fn signal(t: f64) -> f64 {
    (1.3 * t).sin() * (-0.2 * t).exp() + 0.5 * (3.1 * t).cos() - 0.5
}

fn convolution(c: &mut Criterion) {
    let kernel = build_kernel(KernelParams::new(2, 9, 3.0, 5.0).unwrap(), &BranchCutConfig::default()).unwrap();
    let dt = 6e-4;
    let mut g = c.benchmark_group("convolution");
    g.sample_size(10);
    for steps in [1_000usize, 4_000, 16_000] {
        let samples: Vec<f64> = (0..=steps).map(|k| signal(k as f64 * dt)).collect();
        g.throughput(Throughput::Elements(steps as u64));
        g.bench_with_input(BenchmarkId::new("recursive", steps), &samples, |b, s| {
            b.iter(|| {
                let mut conv = KernelConvolver::new(&kernel, dt).unwrap();
                s.windows(2).map(|w| conv.convolve_step(w[0], w[1], dt).unwrap()).sum::<f64>()
            })
        });
        g.bench_with_input(BenchmarkId::new("direct", steps), &samples, |b, s| {
            b.iter(|| direct_convolution(|t| kernel.sigma(t), s, dt, 4))
        });
    }
    g.finish();
}

criterion_group!(benches, convolution);
criterion_main!(benches);
