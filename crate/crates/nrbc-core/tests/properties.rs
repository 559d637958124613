use nrbc_core::convolution::KernelConvolver;
use nrbc_core::kernel::{build_kernel, BranchCutConfig, KernelParams};
use nrbc_core::oracle::{exp_diff, sin_power_expansion, TrigSignal};
use nrbc_core::specfun::{bessel_ik_log, bessel_k_scaled, find_zeros, log_bessel_i, log_bessel_k, zero_count, BesselOrder, DEFAULT_ZERO_TOL};
use nrbc_core::Complex64 as C64;
use proptest::prelude::*;
use std::f64::consts::PI;

fn cfg() -> ProptestConfig {
    ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(cfg())]

    #[test]
    fn wronskian(n in 0usize..=20, r in 0.1f64..50.0) {
        let nu = n as f64;
        let lhs = (log_bessel_i(nu, r).unwrap() + log_bessel_k(nu + 1.0, r).unwrap()).exp()
            + (log_bessel_i(nu + 1.0, r).unwrap() + log_bessel_k(nu, r).unwrap()).exp();
        prop_assert!((lhs * r - 1.0).abs() < 1e-11, "n={n} r={r}: {lhs}");
    }

    #[test]
    fn log_derivative_wronskian(nu2 in 0u32..120, lx in -1.0f64..2.3) {
        let (nu, x) = (f64::from(nu2) / 2.0, 10f64.powf(lx));
        let ik = bessel_ik_log(nu, x).unwrap();
        // I K' - I' K = -1/x
        let w = (ik.log_i + ik.log_k + x.ln()).exp() * (ik.di - ik.dk);
        prop_assert!((w - 1.0).abs() < 1e-11, "nu={nu} x={x}: {w}");
    }

    #[test]
    fn complex_k_recurrences(n in 1usize..30, re in -20.0f64..30.0, im in 0.5f64..30.0, half in any::<bool>()) {
        let z = C64::new(re, im);
        let (cur, prev) = if half {
            (BesselOrder::half(n), BesselOrder::half(n - 1))
        } else {
            (BesselOrder::integer(n), BesselOrder::integer(n - 1))
        };
        let (k, km) = (bessel_k_scaled(cur, z).unwrap(), bessel_k_scaled(prev, z).unwrap());
        let nu = cur.nu();
        let scale = k.scale.max(km.scale).max(k.next.norm());
        // K_{nu+1} = K_{nu-1} + (2 nu / z) K_nu
        prop_assert!((k.next - km.value - k.value * (2.0 * nu) / z).norm() < 1e-10 * scale);
        // K'_nu = (nu / z) K_nu - K_{nu+1}
        prop_assert!((k.deriv - (k.value * nu / z - k.next)).norm() < 1e-10 * scale);
        // the previous order's K_{nu} is this order's value
        prop_assert!((km.next - k.value).norm() < 1e-10 * scale);
    }

    #[test]
    fn conjugate_symmetry_of_k(n in 0usize..20, re in -10.0f64..10.0, im in 0.1f64..10.0) {
        let z = C64::new(re, im);
        let a = bessel_k_scaled(BesselOrder::integer(n), z).unwrap();
        let b = bessel_k_scaled(BesselOrder::integer(n), z.conj()).unwrap();
        prop_assert!((a.value.conj() - b.value).norm() <= 1e-12 * a.scale.max(a.value.norm()));
    }

    #[test]
    fn zero_sets_closed_under_conjugation(n in 0usize..64, half in any::<bool>()) {
        let order = if half { BesselOrder::half(n) } else { BesselOrder::integer(n) };
        let set = find_zeros(order, DEFAULT_ZERO_TOL).unwrap();
        prop_assert_eq!(set.zeros.len(), zero_count(order));
        for z in &set.zeros {
            prop_assert!(z.re < 0.0);
            prop_assert!(set.zeros.contains(&z.conj()));
            // zeros lie inside the disc |z| < nu
            prop_assert!(z.norm() < order.nu());
        }
        prop_assert!(set.max_residual() < DEFAULT_ZERO_TOL);
    }

    #[test]
    fn sin_power_expansion_exact(p in 1u32..10, w in 0.1f64..40.0, t in 0.0f64..5.0) {
        let v: C64 = sin_power_expansion(p, w).iter().map(|(a, mu)| a * C64::new(0.0, mu * t).exp()).sum();
        let want = (w * t).sin().powi(p as i32);
        prop_assert!((v.re - want).abs() < 1e-13 && v.im.abs() < 1e-13);
    }

    #[test]
    fn exp_diff_symmetric_and_continuous(ar in -5.0f64..1.0, ai in -5.0f64..5.0, eps in -1e-9f64..1e-9, s in 0.0f64..3.0) {
        let a = C64::new(ar, ai);
        let b = a + C64::new(eps, 0.0);
        let e = exp_diff(a, b, s);
        prop_assert!((e - exp_diff(b, a, s)).norm() <= 1e-14 * e.norm().max(1.0));
        // the confluent limit is s e^{a s}
        let lim = (a * s).exp() * s;
        prop_assert!((e - lim).norm() <= 1e-7 * lim.norm().max(1e-300));
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn kernel_scaling(n in 0usize..12, d in 2u8..=3, b in 1.0f64..6.0, c in 0.5f64..8.0, t in 0.05f64..3.0) {
        let cut = BranchCutConfig::default();
        let k = build_kernel(KernelParams::new(d, n, b, c).unwrap(), &cut).unwrap();
        let unit = build_kernel(KernelParams::new(d, n, 1.0, 1.0).unwrap(), &cut).unwrap();
        // sigma(t; b, c) = (c / b^2) sigma(c t / b; 1, 1)
        let want = c / (b * b) * unit.sigma(c * t / b);
        prop_assert!((k.sigma(t) - want).abs() <= 1e-10 * want.abs().max(c / (b * b)));
    }

    #[test]
    fn omega_derivative_is_c_sigma(n in 0usize..10, d in 2u8..=3, t in 0.05f64..3.0) {
        let p = KernelParams::new(d, n, 3.0, 5.0).unwrap();
        let k = build_kernel(p, &BranchCutConfig::default()).unwrap();
        prop_assert_eq!(k.omega(0.0), p.omega_offset());
        let h = 1e-4;
        let fd = (k.omega(t + h) - k.omega(t - h)) / (2.0 * h);
        let want = p.c * k.sigma(t);
        prop_assert!((fd - want).abs() < 1e-6 * want.abs().max(1.0), "{fd} vs {want}");
    }

    #[test]
    fn convolution_is_linear(n in 0usize..10, d in 2u8..=3, x in -2.0f64..2.0, y in -2.0f64..2.0, w1 in 0.0f64..10.0, w2 in 0.0f64..10.0) {
        let k = build_kernel(KernelParams::new(d, n, 3.0, 5.0).unwrap(), &BranchCutConfig::default()).unwrap();
        let dt = 1e-2;
        let g1 = |t: f64| (w1 * t).sin();
        let g2 = |t: f64| (w2 * t).cos() - 1.0;
        let run = |g: &dyn Fn(f64) -> f64| -> Vec<f64> {
            let mut conv = KernelConvolver::new(&k, dt).unwrap();
            (0..300).map(|m| conv.convolve_step(g(m as f64 * dt), g((m + 1) as f64 * dt), dt).unwrap()).collect()
        };
        let (a, b) = (run(&g1), run(&g2));
        let mixed = run(&|t| x * g1(t) + y * g2(t));
        for i in 0..mixed.len() {
            let want = x * a[i] + y * b[i];
            prop_assert!((mixed[i] - want).abs() <= 1e-12 * (1.0 + x.abs() * a[i].abs() + y.abs() * b[i].abs()));
        }
    }
}

/// Recursive convolution of sampled data converges at second order to the
/// exact convolution of the underlying trigonometric signal.
#[test]
fn recursive_convolution_second_order() {
    let sig = TrigSignal { terms: vec![(C64::new(0.7, -0.2), 3.0), (C64::new(-0.4, 0.5), 7.5)] };
    for (d, n) in [(2u8, 0usize), (2, 6), (3, 4)] {
        let k = build_kernel(KernelParams::new(d, n, 3.0, 5.0).unwrap(), &BranchCutConfig::default()).unwrap();
        let t_end = 2.0;
        let exact = sig.sigma_convolution(&k, t_end);
        let errs: Vec<f64> = [200usize, 400, 800]
            .iter()
            .map(|&steps| {
                let dt = t_end / steps as f64;
                let mut conv = KernelConvolver::new(&k, dt).unwrap();
                let mut last = 0.0;
                for m in 0..steps {
                    last = conv.convolve_step(sig.value(m as f64 * dt), sig.value((m + 1) as f64 * dt), dt).unwrap();
                }
                (last - exact).abs()
            })
            .collect();
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!((order - 2.0).abs() < 0.15, "d={d} n={n}: {errs:?}");
        }
    }
}

#[test]
fn half_order_closed_form() {
    for z in [C64::new(0.3, 0.1), C64::new(-2.0, 1.5), C64::new(5.0, -4.0)] {
        let k = bessel_k_scaled(BesselOrder::half(0), z).unwrap();
        let want = (C64::new(PI / 2.0, 0.0) / z).sqrt();
        assert!((k.value - want).norm() < 1e-14 * want.norm());
    }
}
