//! Complex zeros of `K_n` and `K_{n+1/2}`.
//!
//! Seeds come from the uniform (Debye) asymptotics of the continuation
//! formula: with `z = -nu kappa` in the upper half plane, a zero satisfies
//! approximately `Theta(kappa) = i pi m / (2 nu)` where
//! `Theta(kappa) = sqrt(1+kappa^2) + ln(kappa / (1 + sqrt(1+kappa^2)))` and
//! `m = 2k - nu - 1/2` ranges over `(-nu, 0]`. The value `m = 0` gives the
//! real zero of `K_{n+1/2}` for odd `n`. Each seed is polished by Newton's
//! method on `K_nu` itself.

use super::complex::bessel_k_scaled;
use super::{BesselOrder, EYE_A};
use crate::error::{Error, Result};
use crate::exec::Execution;
use num_complex::Complex64 as C64;
use std::f64::consts::{FRAC_PI_2, PI};

pub const DEFAULT_ZERO_TOL: f64 = 1e-12;
const MAX_NEWTON: usize = 50;

/// Zeros of `K_nu`, closed under conjugation. Complex zeros are stored as
/// `z, conj(z)` pairs with `Im z > 0`, followed by the real zero if any.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroSet {
    pub order: BesselOrder,
    pub count: usize,
    pub zeros: Vec<C64>,
    /// `|K_nu(z_j)| / |K'_nu(z_j)|`
    pub residuals: Vec<f64>,
}

impl ZeroSet {
    pub fn is_empty(&self) -> bool {
        self.zeros.is_empty()
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }
}

/// Number of zeros of `K_nu`: the even integer nearest `n - 1/2` (the larger
/// one on ties) for integer order, `n` for half-integer order.
pub fn zero_count(order: BesselOrder) -> usize {
    if order.is_half() || order.n.is_multiple_of(2) {
        order.n
    } else {
        order.n - 1
    }
}

fn theta_c(k: C64) -> C64 {
    let s = (k * k + 1.0).sqrt();
    s + (k / (s + 1.0)).ln()
}

/// Solve `Theta(kappa) = i phi` for `phi` in `(-pi/2, 0]`, `Re kappa > 0`, `Im kappa <= 0`.
fn solve_theta(phi: f64) -> Option<C64> {
    let s = -phi / FRAC_PI_2;
    let ang = s * FRAC_PI_2;
    let mut k = C64::new(EYE_A * ang.cos(), -ang.sin());
    let target = C64::new(0.0, phi);
    for _ in 0..200 {
        let f = theta_c(k) - target;
        let df = (k * k + 1.0).sqrt() / k;
        let mut dk = f / df;
        let lim = 0.2 * k.norm();
        if dk.norm() > lim {
            dk *= lim / dk.norm();
        }
        let mut next = k - dk;
        if next.re <= 0.0 {
            next.re = 0.5 * k.re;
        }
        if next.im > 0.0 {
            next.im = 0.5 * k.im;
        }
        k = next;
        if dk.norm() < 1e-14 * (1.0 + k.norm()) {
            return Some(k);
        }
    }
    None
}

/// Asymptotic seeds in the closed upper half plane.
pub fn zero_seeds(order: BesselOrder) -> Vec<C64> {
    let nu = order.nu();
    let mut seeds = Vec::new();
    for k in 1.. {
        let m = 2.0 * k as f64 - nu - 0.5;
        if m > 0.0 {
            break;
        }
        if m <= -nu {
            continue;
        }
        if m == 0.0 {
            seeds.push(C64::new(-nu * EYE_A, 0.0));
            continue;
        }
        let phi = PI * m / (2.0 * nu);
        match solve_theta(phi) {
            Some(kappa) => seeds.push(-kappa * nu),
            None => seeds.push(C64::new(-nu * EYE_A * (phi.cos()), -nu * phi.sin())),
        }
    }
    seeds
}

fn fail(order: BesselOrder, detail: impl Into<String>) -> Error {
    Error::ZeroFinding { order: order.to_string(), detail: detail.into() }
}

fn newton(order: BesselOrder, seed: C64, tol: f64, real: bool) -> Result<(C64, f64)> {
    let mut z = seed;
    for _ in 0..MAX_NEWTON {
        let k = bessel_k_scaled(order, z)?;
        let mut dz = k.newton_step();
        if real {
            dz.im = 0.0;
        }
        z -= dz;
        if dz.norm() < tol * (1.0 + z.norm()) {
            let k = bessel_k_scaled(order, z)?;
            return Ok((z, k.newton_step().norm()));
        }
    }
    Err(fail(order, format!("Newton did not converge from seed {seed}")))
}

/// All zeros of `K_nu`, each with `|K_nu(z)| < tol |K'_nu(z)|`.
pub fn find_zeros(order: BesselOrder, tol: f64) -> Result<ZeroSet> {
    let count = zero_count(order);
    let seeds = zero_seeds(order);
    let mut upper = Vec::new();
    let mut real_zero = None;
    for seed in seeds {
        let is_real = seed.im == 0.0;
        let (z, res) = newton(order, seed, tol, is_real)?;
        if is_real {
            real_zero = Some((C64::new(z.re, 0.0), res));
        } else {
            if z.im <= 0.0 {
                return Err(fail(order, format!("seed {seed} converged to {z} off the upper half plane")));
            }
            upper.push((z, res));
        }
    }
    let mut zeros = Vec::with_capacity(count);
    let mut residuals = Vec::with_capacity(count);
    for &(z, r) in &upper {
        zeros.push(z);
        zeros.push(z.conj());
        residuals.push(r);
        residuals.push(r);
    }
    if let Some((z, r)) = real_zero {
        zeros.push(z);
        residuals.push(r);
    }

    if zeros.len() != count {
        return Err(fail(order, format!("found {} zeros, expected {count}", zeros.len())));
    }
    let sep = 1e-6 * (order.n.max(1) as f64);
    for i in 0..zeros.len() {
        if zeros[i].re >= 0.0 {
            return Err(fail(order, format!("zero {} has non-negative real part", zeros[i])));
        }
        for j in 0..i {
            if (zeros[i] - zeros[j]).norm() < sep {
                return Err(fail(order, format!("duplicate zero near {}", zeros[i])));
            }
        }
    }
    if let Some(bad) = residuals.iter().position(|&r| !(r < tol)) {
        return Err(fail(order, format!("residual {} exceeds tolerance at {}", residuals[bad], zeros[bad])));
    }
    Ok(ZeroSet { order, count, zeros, residuals })
}

/// Zero sets for several orders, optionally in parallel.
pub fn zero_sets(orders: &[BesselOrder], tol: f64, exec: Execution) -> Result<Vec<ZeroSet>> {
    exec.try_map(orders, |&o| find_zeros(o, tol))
}
