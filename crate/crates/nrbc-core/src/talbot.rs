//! Numerical Laplace inversion on a fixed Talbot contour (Weideman's
//! parameters), used to cross-check the closed-form kernels and the exact
//! solution independently of the zero/branch-cut decomposition.
//!
//! ```text
//! s(theta) = (N/t) (-0.6122 + 0.5017 theta cot(0.6407 theta) + 0.2645 i theta),  -pi < theta < pi
//! ```

use crate::error::{Error, Result};
use crate::kernel::KernelParams;
use crate::specfun::{bessel_k_scaled, BesselOrder};
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

const A0: f64 = -0.6122;
const A1: f64 = 0.5017;
const A2: f64 = 0.6407;
const A3: f64 = 0.2645;

fn contour(theta: f64, scale: f64) -> (C64, C64) {
    if theta == 0.0 {
        return (C64::new(scale * (A0 + A1 / A2), 0.0), C64::new(0.0, scale * A3));
    }
    let x = A2 * theta;
    let cot = x.cos() / x.sin();
    let s = C64::new(A0 + A1 * theta * cot, A3 * theta) * scale;
    let ds = C64::new(A1 * (cot - x / (x.sin() * x.sin())), A3) * scale;
    (s, ds)
}

/// Smallest even `N >= n_min` whose contour at time `t` leaves every singularity
/// in `poles` (upper-half-plane representatives suffice) inside.
pub fn points_for(poles: &[C64], t: f64, n_min: usize) -> usize {
    let mut n = n_min + n_min % 2;
    'grow: loop {
        let scale = n as f64 / t;
        for p in poles {
            let theta = p.im.abs() / (scale * A3);
            if theta >= PI * 0.95 {
                n += 8;
                continue 'grow;
            }
            let (s, _) = contour(theta, scale);
            if s.re <= p.re {
                n += 8;
                continue 'grow;
            }
        }
        return n;
    }
}

/// `f(t)` from its transform `F` with `n` contour points; `f` must be real.
pub fn invert(f: impl Fn(C64) -> Result<C64>, t: f64, n: usize) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::domain("talbot::invert", format!("t must be positive, got {t}")));
    }
    let scale = n as f64 / t;
    let h = 2.0 * PI / n as f64;
    // conjugate symmetry: sum over the upper half of the contour only
    let mut acc = C64::new(0.0, 0.0);
    for k in 0..n / 2 {
        let theta = (k as f64 + 0.5) * h;
        let (s, ds) = contour(theta, scale);
        acc += (s * t).exp() * f(s)? * ds;
    }
    Ok((acc * h / PI).im)
}

/// Invert with point counts growing from the pole-containment minimum and keep
/// the value where successive refinements agree best. Rounding grows roughly
/// like `e^{0.17 N} eps`, so more points is not always better.
pub fn invert_adaptive(f: impl Fn(C64) -> Result<C64>, poles: &[C64], t: f64) -> Result<f64> {
    let start = points_for(poles, t, 24);
    let mut prev = invert(&f, t, start)?;
    let mut best = (f64::INFINITY, prev);
    for k in 1..=10 {
        let cur = invert(&f, t, start + 8 * k)?;
        let diff = (cur - prev).abs();
        if diff < best.0 {
            best = (diff, cur);
        }
        prev = cur;
    }
    Ok(best.1)
}

/// Laplace transform of `sigma_nu`: `s/c + 1/(2b) + (s/c) K'_nu(sb/c)/K_nu(sb/c)`.
pub fn sigma_transform(p: &KernelParams, s: C64) -> Result<C64> {
    let z = s * (p.b / p.c);
    let k = bessel_k_scaled(p.order(), z)?;
    Ok(s / p.c + 1.0 / (2.0 * p.b) + s / p.c * k.log_derivative())
}

/// `sigma_nu(t)` by Talbot inversion of its transform.
pub fn sigma_talbot(p: &KernelParams, t: f64) -> Result<f64> {
    let zeros = crate::specfun::zeros::zero_seeds(p.order());
    let poles: Vec<C64> = zeros.iter().map(|z| z * 1.1 * (p.c / p.b)).collect();
    invert_adaptive(|s| sigma_transform(p, s), &poles, t)
}

/// `H_n(r, beta0 + t)` (time measured from the arrival `beta0 = (r - b0)/c`) by
/// Talbot inversion of `e^{beta0 s} K_n(sr/c)/K_n(s b0/c) - sqrt(b0/r)`.
pub fn exact_kernel_talbot(n: usize, b0: f64, c: f64, r: f64, t: f64) -> Result<f64> {
    let order = BesselOrder::integer(n);
    let seeds = crate::specfun::zeros::zero_seeds(order);
    let poles: Vec<C64> = seeds.iter().map(|z| z * 1.1 * (c / b0)).collect();
    let direct = (b0 / r).sqrt();
    invert_adaptive(
        |s| {
            // scaled K absorbs the factor e^{beta0 s}
            let num = bessel_k_scaled(order, s * (r / c))?;
            let den = bessel_k_scaled(order, s * (b0 / c))?;
            Ok(num.value / den.value - direct)
        },
        &poles,
        t,
    )
}
