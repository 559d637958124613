//! `K_nu(z)` for complex `z` and `nu = n` or `n + 1/2`, principal branch.
//!
//! On the right half plane `e^{w} K_nu(w)` comes from the lowest two orders
//! (series near the origin, Steed's continued fraction elsewhere, or closed
//! forms at half order) followed by upward recurrence. On the left half plane
//! the continuation formula
//!
//! ```text
//! K_nu(w e^{±iπ}) = e^{∓iνπ} K_nu(w) ∓ iπ I_nu(w)
//! ```
//!
//! is used with `e^{-w} I_nu(w)` from Miller's backward recurrence. Both
//! pieces are accurate to a few ulps in relative terms, so the absolute error
//! of the sum is a few ulps of the larger piece, including at the zeros.

use super::BesselOrder;
use crate::error::{Error, Result};
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

const EPS: f64 = 1e-16;
const EULER: f64 = 0.577_215_664_901_532_9;
const BIG: f64 = 1e200;

/// `K_nu`, `K'_nu` and `K_{nu+1}` at `z`, all multiplied by `e^{z}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledK {
    pub z: C64,
    pub value: C64,
    pub deriv: C64,
    pub next: C64,
    /// Magnitude of the largest term entering `value`; `value` carries an
    /// absolute error of a few ulps of this number.
    pub scale: f64,
}

impl ScaledK {
    /// Unscaled `(K_nu(z), K'_nu(z))`.
    pub fn unscaled(&self) -> (C64, C64) {
        let e = (-self.z).exp();
        (self.value * e, self.deriv * e)
    }

    /// `K'_nu(z) / K_nu(z)`.
    pub fn log_derivative(&self) -> C64 {
        self.deriv / self.value
    }

    /// `K_nu(z) / K'_nu(z)`, the Newton step for a zero.
    pub fn newton_step(&self) -> C64 {
        self.value / self.deriv
    }
}

/// `e^{w} K_0(w)`, `e^{w} K_1(w)` for `Re w >= 0`, `w != 0`.
fn k01_scaled(w: C64) -> Result<(C64, C64)> {
    if w.norm() <= 2.0 {
        // Temme's series at mu = 0
        let d = -(w * 0.5).ln();
        let dd = w * w * 0.25;
        let mut ff = d - EULER;
        let mut sum = ff;
        let mut sum1 = C64::new(0.5, 0.0);
        let mut c = C64::new(1.0, 0.0);
        let mut p = 0.5;
        for i in 1..500 {
            let fi = i as f64;
            ff = (ff * fi + 2.0 * p) / (fi * fi);
            c = c * dd / fi;
            p /= fi;
            let del = c * ff;
            sum += del;
            sum1 += c * (p - ff * fi);
            if del.norm() < sum.norm() * EPS {
                break;
            }
        }
        let e = w.exp();
        Ok((sum * e, sum1 * 2.0 / w * e))
    } else {
        // Steed's CF2 at mu = 0
        let a1 = 0.25;
        let mut b = (w + 1.0) * 2.0;
        let mut d = b.inv();
        let mut delh = d;
        let mut h = d;
        let mut q1 = C64::new(0.0, 0.0);
        let mut q2 = C64::new(1.0, 0.0);
        let mut q = C64::new(a1, 0.0);
        let mut c = a1;
        let mut a = -a1;
        let mut s = q * delh + 1.0;
        for i in 2..100_000 {
            let fi = i as f64;
            a -= 2.0 * (fi - 1.0);
            c = -a * c / fi;
            let qnew = (q1 - b * q2) / a;
            q1 = q2;
            q2 = qnew;
            q += qnew * c;
            b += 2.0;
            d = (b + d * a).inv();
            delh = (b * d - 1.0) * delh;
            h += delh;
            let dels = q * delh;
            s += dels;
            if (dels / s).norm() < EPS {
                let h = h * a1;
                let k0 = (C64::new(PI, 0.0) / (w * 2.0)).sqrt() / s;
                let k1 = k0 * (w + 0.5 - h) / w;
                return Ok((k0, k1));
            }
        }
        Err(Error::accuracy("bessel_k_complex", format!("CF2 did not converge at w={w}")))
    }
}

/// `e^{w} K_{mu+k}(w)` for `k = 0..=kmax`, `Re w >= 0`.
fn k_seq_right(half: bool, kmax: usize, w: C64) -> Result<Vec<C64>> {
    let (k0, k1) = if half {
        let s = (C64::new(PI, 0.0) / (w * 2.0)).sqrt();
        (s, s * (w.inv() + 1.0))
    } else {
        k01_scaled(w)?
    };
    let mu = if half { 0.5 } else { 0.0 };
    let mut out = Vec::with_capacity(kmax + 1);
    out.push(k0);
    out.push(k1);
    for k in 1..kmax {
        let next = out[k - 1] + out[k] * (2.0 * (mu + k as f64)) / w;
        out.push(next);
    }
    out.truncate(kmax + 1);
    if out.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(Error::accuracy("bessel_k_complex", format!("K overflow at w={w}, order {kmax}")));
    }
    Ok(out)
}

/// `e^{-w} I_{mu+k}(w)` for `k = 0..=kmax`, `Re w >= 0`, by Miller's algorithm.
fn i_seq_right(half: bool, kmax: usize, w: C64) -> Result<Vec<C64>> {
    let mu = if half { 0.5 } else { 0.0 };
    let two_over_w = w.inv() * 2.0;
    // Olver's forward test fixes the starting index
    let mut p0 = C64::new(0.0, 0.0);
    let mut p1 = C64::new(1.0, 0.0);
    let mut k = kmax + 1;
    let limit = kmax + 20 + (50.0 * w.norm()) as usize + 2000;
    while p1.norm() < 1e20 {
        let p2 = p0 - p1 * two_over_w * (mu + k as f64);
        p0 = p1;
        p1 = p2;
        k += 1;
        if k > limit {
            return Err(Error::accuracy("bessel_i_scaled", format!("Miller start index not found for w={w}")));
        }
    }
    let start = k + 10;

    let mut out = vec![C64::new(0.0, 0.0); kmax + 1];
    let mut y_up = C64::new(0.0, 0.0);
    let mut y = C64::new(1e-30, 0.0);
    let mut sum = C64::new(0.0, 0.0);
    let mut lowest = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
    for j in (0..=start).rev() {
        if j <= kmax {
            out[j] = y;
        }
        if !half && j >= 1 {
            sum += y * 2.0;
        }
        let y_down = y_up + y * two_over_w * (mu + j as f64);
        if j == 0 {
            lowest = (y, y_down);
            if !half {
                sum += y;
            }
            break;
        }
        y_up = y;
        y = y_down;
        if y.norm() > BIG {
            let r = 1.0 / BIG;
            y *= r;
            y_up *= r;
            sum *= r;
            for v in out.iter_mut() {
                *v *= r;
            }
        }
    }
    let norm = if half {
        // e^{-w} I_{1/2} = (1 - e^{-2w}) / sqrt(2 pi w), e^{-w} I_{-1/2} = (1 + e^{-2w}) / sqrt(2 pi w)
        let e = (-w * 2.0).exp();
        let root = (w * (2.0 * PI)).sqrt();
        if e.re >= 0.0 {
            ((e + 1.0) / root) / lowest.1
        } else {
            ((-e + 1.0) / root) / lowest.0
        }
    } else {
        sum.inv()
    };
    for v in out.iter_mut() {
        *v *= norm;
    }
    if out.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(Error::accuracy("bessel_i_scaled", format!("non-finite Miller result at w={w}")));
    }
    Ok(out)
}

/// `e^{z} K_nu(z)` and `e^{z} K_{nu+1}(z)` for the principal branch.
fn k_pair_scaled(order: BesselOrder, z: C64) -> Result<(C64, C64, f64)> {
    let n = order.n;
    let half = order.is_half();
    if z.re >= 0.0 {
        let ks = k_seq_right(half, n + 1, z)?;
        return Ok((ks[n], ks[n + 1], ks[n].norm()));
    }
    let w = -z;
    let s = if z.im >= 0.0 { 1.0 } else { -1.0 };
    let ks = k_seq_right(half, n + 1, w)?;
    let is = i_seq_right(half, n + 1, w)?;
    let e2 = (-w * 2.0).exp();
    // e^{-s i nu pi} for nu = m and nu = m + 1/2
    let phase = |m: usize| -> C64 {
        let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
        if half {
            C64::new(0.0, -s * sign)
        } else {
            C64::new(sign, 0.0)
        }
    };
    let ipi = C64::new(0.0, s * PI);
    let a0 = phase(n) * e2 * ks[n];
    let b0 = ipi * is[n];
    let a1 = phase(n + 1) * e2 * ks[n + 1];
    let b1 = ipi * is[n + 1];
    Ok((a0 - b0, a1 - b1, a0.norm().max(b0.norm())))
}

/// Scaled `K_nu`, `K'_nu`, `K_{nu+1}` at complex `z != 0`.
pub fn bessel_k_scaled(order: BesselOrder, z: C64) -> Result<ScaledK> {
    if z.norm() == 0.0 || !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::domain("bessel_k_complex", format!("argument must be finite and nonzero, got {z}")));
    }
    let (value, next, scale) = k_pair_scaled(order, z)?;
    let deriv = value * order.nu() / z - next;
    if !(value.re.is_finite() && value.im.is_finite() && next.re.is_finite() && next.im.is_finite()) {
        return Err(Error::accuracy("bessel_k_complex", format!("non-finite value for {order} at {z}")));
    }
    Ok(ScaledK { z, value, deriv, next, scale })
}

/// `K_n(z)` and `K'_n(z)` (scaled by `e^{z}`) for integer order `n`.
pub fn bessel_k_complex(n: usize, z: C64) -> Result<ScaledK> {
    bessel_k_scaled(BesselOrder::integer(n), z)
}

/// `K_{n+1/2}(z)` from the terminating series
/// `sqrt(pi/2z) e^{-z} sum_k (n+k)!/(k!(n-k)!(2z)^k)`.
pub fn bessel_k_half(n: usize, z: C64) -> Result<C64> {
    Ok(bessel_k_half_poly(n, z)? * (C64::new(PI, 0.0) / (z * 2.0)).sqrt() * (-z).exp())
}

/// The polynomial factor `sum_k (n+k)!/(k!(n-k)!(2z)^k)` of `K_{n+1/2}`.
pub fn bessel_k_half_poly(n: usize, z: C64) -> Result<C64> {
    if z.norm() == 0.0 {
        return Err(Error::domain("bessel_k_half", "argument must be nonzero"));
    }
    let u = (z * 2.0).inv();
    let coeffs = half_poly_coeffs(n);
    let mut acc = C64::new(0.0, 0.0);
    for &a in coeffs.iter().rev() {
        acc = acc * u + a;
    }
    Ok(acc)
}

/// `(n+k)! / (k! (n-k)!)`, `k = 0..=n`.
pub fn half_poly_coeffs(n: usize) -> Vec<f64> {
    let mut a = Vec::with_capacity(n + 1);
    a.push(1.0);
    for k in 1..=n {
        let prev = a[k - 1];
        a.push(prev * ((n + k) * (n - k + 1)) as f64 / k as f64);
    }
    a
}
