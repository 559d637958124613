//! Exact exterior solution of the two-dimensional wave-maker problem, mode by
//! mode, together with the boundary residual of the nonreflecting condition.
//!
//! For data `G(phi, t) = A1 exp(-iota |x_b(phi) - x_s|^2) sin^p(omega t)` on the
//! circle `r = b0`, mode `n` of the outgoing solution is
//!
//! ```text
//! U_n(r, t) = int_{beta0}^t H_n(r, tau) G_n(t - tau) dtau + sqrt(b0/r) G_n(t - beta0),   t >= beta0 = (r - b0)/c
//! H_n(r, t) = (c/b0) sum_j K_n(r z_j/b0)/K_n'(z_j) e^{c z_j t/b0}
//!           + (-1)^n (c/b0) int_0^inf [I_n(r rho/b0) K_n(rho) - K_n(r rho/b0) I_n(rho)] W_n(rho) e^{-c rho t/b0} drho
//! ```
//!
//! and zero before the arrival time `beta0`. Every term of `H_n` is an
//! exponential in time and `sin^p` is a finite exponential sum, so the time
//! convolution, its derivatives and the kernel convolution `sigma_n * U_n`
//! are all evaluated in closed form.

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::kernel::{build_kernel, cexpm1, BranchCutConfig, BranchCutRule, ExpTerm, KernelDecomposition, KernelParams};
use crate::specfun::{bessel_ik_log, bessel_k_scaled, find_zeros, BesselOrder, LogIK, ZeroSet, DEFAULT_ZERO_TOL};
use num_complex::Complex64 as C64;
use rustfft::FftPlanner;
use std::f64::consts::PI;

/// Gaussian wave-maker data on the circle `r = b0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirichletData {
    pub a1: f64,
    pub iota: f64,
    pub xs: f64,
    pub ys: f64,
    pub b0: f64,
    pub omega: f64,
    pub p: u32,
}

impl DirichletData {
    /// `A1 = 10`, `iota = 0.1`, `xs = ys = 2.1`, `b0 = 2`.
    pub fn standard(omega: f64, p: u32) -> Self {
        DirichletData { a1: 10.0, iota: 0.1, xs: 2.1, ys: 2.1, b0: 2.0, omega, p }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.b0 > 0.0) {
            return Err(Error::Config(format!("b0 must be positive, got {}", self.b0)));
        }
        if self.p < 1 {
            return Err(Error::Config("p must be at least 1".into()));
        }
        Ok(())
    }

    /// Spatial factor of `G` at angle `phi`.
    pub fn trace(&self, phi: f64) -> f64 {
        let dx = self.b0 * phi.cos() - self.xs;
        let dy = self.b0 * phi.sin() - self.ys;
        self.a1 * (-self.iota * (dx * dx + dy * dy)).exp()
    }

    /// `sin^p(omega t)` as `sum_k amp_k e^{i mu_k t}`.
    pub fn temporal(&self) -> Vec<(C64, f64)> {
        sin_power_expansion(self.p, self.omega)
    }
}

/// `sin^p(w t) = (2i)^{-p} sum_k C(p,k) (-1)^k e^{i (p - 2k) w t}`.
pub fn sin_power_expansion(p: u32, w: f64) -> Vec<(C64, f64)> {
    let pre = C64::new(0.0, 2.0).powi(-(p as i32));
    let mut binom = 1.0;
    (0..=p)
        .map(|k| {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            let term = (pre * binom * sign, (p as f64 - 2.0 * k as f64) * w);
            binom = binom * (p - k) as f64 / (k + 1) as f64;
            term
        })
        .collect()
}

/// Boundary data of one Fourier mode: `G_n(t) = spatial * sin^p(omega t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalBoundaryCoefficient {
    pub n: i64,
    pub spatial: C64,
    pub temporal: Vec<(C64, f64)>,
}

impl ModalBoundaryCoefficient {
    /// `G_n(t)` for `t >= 0` (zero before).
    pub fn value(&self, t: f64) -> C64 {
        if t < 0.0 {
            return C64::new(0.0, 0.0);
        }
        self.spatial * self.temporal.iter().map(|&(a, mu)| a * C64::new(0.0, mu * t).exp()).sum::<C64>()
    }

    /// `d^k G_n / dt^k` for `k = 0, 1, 2`.
    pub fn derivative(&self, t: f64, k: u32) -> C64 {
        if t < 0.0 {
            return C64::new(0.0, 0.0);
        }
        self.spatial
            * self
                .temporal
                .iter()
                .map(|&(a, mu)| a * C64::new(0.0, mu).powu(k) * C64::new(0.0, mu * t).exp())
                .sum::<C64>()
    }
}

fn fft_coefficients(data: &DirichletData, m: usize, grid: usize) -> Vec<C64> {
    let mut buf: Vec<C64> = (0..grid).map(|k| C64::new(data.trace(2.0 * PI * k as f64 / grid as f64), 0.0)).collect();
    FftPlanner::new().plan_fft_forward(grid).process(&mut buf);
    let scale = 1.0 / grid as f64;
    (-(m as i64)..=m as i64).map(|n| buf[n.rem_euclid(grid as i64) as usize] * scale).collect()
}

/// Fourier coefficients `g_n`, `|n| <= M`, of the boundary data by FFT.
pub fn modal_coefficients(data: &DirichletData, m: usize, grid: usize) -> Result<Vec<ModalBoundaryCoefficient>> {
    data.validate()?;
    if grid < 4 * m.max(1) || !grid.is_power_of_two() {
        return Err(Error::Resolution(format!("grid size {grid} must be a power of two and at least 4M = {}", 4 * m)));
    }
    let g = fft_coefficients(data, m, grid);
    let g2 = fft_coefficients(data, m, 2 * grid);
    let diff = g.iter().zip(&g2).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    if diff > 1e-14 * data.a1.abs().max(1.0) {
        return Err(Error::Resolution(format!("grid size {grid} unresolved: doubling changes coefficients by {diff:e}")));
    }
    let temporal = data.temporal();
    Ok(g.into_iter()
        .enumerate()
        .map(|(i, spatial)| ModalBoundaryCoefficient { n: i as i64 - m as i64, spatial, temporal: temporal.clone() })
        .collect())
}

/// `(e^{a s} - e^{b s}) / (a - b)`, stable when `a` and `b` are close.
pub fn exp_diff(a: C64, b: C64, s: f64) -> C64 {
    let (hi, lo) = if a.re >= b.re { (a, b) } else { (b, a) };
    let z = (lo - hi) * s;
    let phi1 = if z.norm() < 1e-8 { 1.0 + z * 0.5 } else { cexpm1(z) / z };
    (hi * s).exp() * s * phi1
}

/// Second divided difference of `x -> e^{x s}` at `a, b, c`.
pub fn exp_dd2(a: C64, b: C64, c: C64, s: f64) -> C64 {
    // put the most distant pair at the ends
    let (dab, dac, dbc) = ((a - b).norm(), (a - c).norm(), (b - c).norm());
    let (x, y, z) = if dac >= dab && dac >= dbc {
        (a, b, c)
    } else if dab >= dbc {
        (a, c, b)
    } else {
        (b, a, c)
    };
    if (x - z).norm() * s >= 0.5 {
        return (exp_diff(x, y, s) - exp_diff(y, z, s)) / (x - z);
    }
    // all three points within a small disc: Taylor series about z
    let (u, v) = (x - z, y - z);
    let mut sum = C64::new(0.0, 0.0);
    let mut h = C64::new(1.0, 0.0); // complete homogeneous polynomial h_m(u, v)
    let mut vp = C64::new(1.0, 0.0);
    let mut coef = s * s / 2.0;
    for m in 0..40 {
        let term = h * coef;
        sum += term;
        if term.norm() < 1e-17 * sum.norm() && m > 2 {
            break;
        }
        vp *= v;
        h = u * h + vp;
        coef *= s / (m as f64 + 3.0);
    }
    (z * s).exp() * sum
}

/// Exact solution of one Fourier mode `|n|` (shared by `n` and `-n`).
#[derive(Debug, Clone)]
pub struct ExactModalSolution {
    pub n: usize,
    pub b0: f64,
    pub c: f64,
    pub zeros: ZeroSet,
    /// Scaled `e^{z_j} K_{n+1}(z_j)`.
    knext: Vec<C64>,
    pub rule: BranchCutRule,
    ik_rho: Vec<LogIK>,
}

/// Exponential terms of `H_n(r, beta0 + s) = sum_h C_h(r) e^{lambda_h s}` and `dC_h/dr`.
#[derive(Debug, Clone)]
pub struct RadialTerms {
    pub r: f64,
    pub beta0: f64,
    pub rates: Vec<C64>,
    pub coeffs: Vec<C64>,
    pub dcoeffs: Vec<C64>,
    pub direct: f64,
}

/// `U_n` with its radial and temporal derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeValue {
    pub value: C64,
    pub dr: C64,
    pub dt: C64,
}

impl ExactModalSolution {
    pub fn new(n: usize, b0: f64, c: f64, cfg: &BranchCutConfig) -> Result<Self> {
        if !(b0 > 0.0 && c > 0.0) {
            return Err(Error::Config(format!("need b0 > 0 and c > 0, got b0={b0} c={c}")));
        }
        let order = BesselOrder::integer(n);
        let zeros = find_zeros(order, DEFAULT_ZERO_TOL)?;
        let knext = zeros.zeros.iter().map(|&z| bessel_k_scaled(order, z).map(|k| k.next)).collect::<Result<Vec<_>>>()?;
        let rule = BranchCutRule::build(n, cfg)?;
        let ik_rho = rule.nodes.iter().map(|&rho| bessel_ik_log(n as f64, rho)).collect::<Result<Vec<_>>>()?;
        Ok(ExactModalSolution { n, b0, c, zeros, knext, rule, ik_rho })
    }

    /// Terms of `H_n(r, .)` at radius `r >= b0`.
    pub fn at_radius(&self, r: f64) -> Result<RadialTerms> {
        if !(r >= self.b0) {
            return Err(Error::domain("ExactModalSolution", format!("r = {r} lies inside b0 = {}", self.b0)));
        }
        let (b0, c, n) = (self.b0, self.c, self.n);
        let x = r / b0;
        let order = BesselOrder::integer(n);
        let cap = self.zeros.zeros.len() + self.rule.len();
        let mut rates = Vec::with_capacity(cap);
        let mut coeffs = Vec::with_capacity(cap);
        let mut dcoeffs = Vec::with_capacity(cap);
        for (&z, &kn1) in self.zeros.zeros.iter().zip(&self.knext) {
            // C_j = -(c/b0) K~_n(x z)/K~_{n+1}(z); the factor e^{lambda beta0} is absorbed by the scaling
            let k = bessel_k_scaled(order, z * x)?;
            rates.push(z * (c / b0));
            coeffs.push(-k.value / kn1 * (c / b0));
            dcoeffs.push(-(k.value + k.deriv) * z / kn1 * (c / (b0 * b0)));
        }
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        for (i, &rho) in self.rule.nodes.iter().enumerate() {
            let w = self.rule.weights[i] * self.rule.kernel_values[i] * sign * c / b0;
            let at1 = &self.ik_rho[i];
            let atx = bessel_ik_log(n as f64, x * rho)?;
            let shift = -rho * (x - 1.0);
            let t1 = (atx.log_i + at1.log_k + shift).exp();
            let t2 = (atx.log_k + at1.log_i + shift).exp();
            let bracket = t1 - t2;
            let dbracket = rho / b0 * (atx.di * t1 - atx.dk * t2 - bracket);
            rates.push(C64::new(-c * rho / b0, 0.0));
            coeffs.push(C64::new(w * bracket, 0.0));
            dcoeffs.push(C64::new(w * dbracket, 0.0));
        }
        Ok(RadialTerms { r, beta0: (r - b0) / c, rates, coeffs, dcoeffs, direct: (b0 / r).sqrt() })
    }

    /// `H_n(r, t)`.
    pub fn eval_hn(&self, r: f64, t: f64) -> Result<f64> {
        if !(r > self.b0) {
            return Err(Error::domain("eval_Hn", format!("r = {r} must exceed b0 = {}", self.b0)));
        }
        let terms = self.at_radius(r)?;
        let s = t - terms.beta0;
        Ok(terms.rates.iter().zip(&terms.coeffs).map(|(&l, &a)| a * (l * s).exp()).sum::<C64>().re)
    }
}

impl RadialTerms {
    /// `U_n(r, t)` and derivatives for boundary data `coeff`.
    pub fn eval(&self, coeff: &ModalBoundaryCoefficient, c: f64, t: f64) -> ModeValue {
        let s = t - self.beta0;
        if s < 0.0 {
            let z = C64::new(0.0, 0.0);
            return ModeValue { value: z, dr: z, dt: z };
        }
        let mut value = C64::new(0.0, 0.0);
        let mut dval_ds = C64::new(0.0, 0.0);
        let mut dval_dr = C64::new(0.0, 0.0);
        for &(a, mu) in &coeff.temporal {
            let im = C64::new(0.0, mu);
            let eb = (im * s).exp();
            let (mut v, mut ds, mut dr) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0));
            for ((&l, &ch), &dch) in self.rates.iter().zip(&self.coeffs).zip(&self.dcoeffs) {
                let e = exp_diff(l, im, s);
                v += ch * e;
                ds += ch * (l * e + eb);
                dr += dch * e;
            }
            // direct term sqrt(b0/r) e^{i mu s}
            v += eb * self.direct;
            ds += im * eb * self.direct;
            dr += -eb * self.direct * (0.5 / self.r);
            value += a * v;
            dval_ds += a * ds;
            dval_dr += a * (dr - ds / c);
        }
        let g = coeff.spatial;
        ModeValue { value: g * value, dr: g * dval_dr, dt: g * dval_ds }
    }

    /// `[kernel * U_n(r, .)](t)` in closed form.
    pub fn convolve(&self, kernel: &[ExpTerm], coeff: &ModalBoundaryCoefficient, t: f64) -> C64 {
        let s = t - self.beta0;
        if s <= 0.0 {
            return C64::new(0.0, 0.0);
        }
        let mut acc = C64::new(0.0, 0.0);
        for &(a, mu) in &coeff.temporal {
            let im = C64::new(0.0, mu);
            let mut part = C64::new(0.0, 0.0);
            for k in kernel {
                let mut inner = exp_diff(k.rate, im, s) * self.direct;
                for (&l, &ch) in self.rates.iter().zip(&self.coeffs) {
                    inner += ch * exp_dd2(k.rate, l, im, s);
                }
                part += k.coeff * inner;
            }
            acc += a * part;
        }
        coeff.spatial * acc
    }
}

/// `e_n(t) = |(1/c) dU/dt + dU/dr + U/(2r) - [sigma_n * U_n(b, .)](t)|` at `r = b`.
pub fn boundary_residual(
    terms: &RadialTerms,
    kernel: &KernelDecomposition,
    coeff: &ModalBoundaryCoefficient,
    t: f64,
) -> f64 {
    let c = kernel.params.c;
    let v = terms.eval(coeff, c, t);
    let lhs = v.dt / c + v.dr + v.value / (2.0 * terms.r);
    let kterms: Vec<ExpTerm> = kernel.terms().copied().collect();
    (lhs - terms.convolve(&kterms, coeff, t)).norm()
}

/// Exact solutions and kernels for all modes `|n| <= M` at one outer radius.
#[derive(Debug, Clone)]
pub struct ResidualSetup {
    pub b: f64,
    pub coeffs: Vec<ModalBoundaryCoefficient>,
    terms: Vec<RadialTerms>,
    kernels: Vec<KernelDecomposition>,
}

impl ResidualSetup {
    pub fn new(data: &DirichletData, m: usize, grid: usize, b: f64, c: f64, cfg: &BranchCutConfig, exec: Execution) -> Result<Self> {
        if !(b > data.b0) {
            return Err(Error::Config(format!("b = {b} must exceed b0 = {}", data.b0)));
        }
        let coeffs = modal_coefficients(data, m, grid)?;
        let modes: Vec<usize> = (0..=m).collect();
        let built = exec.try_map(&modes, |&n| -> Result<(RadialTerms, KernelDecomposition)> {
            let sol = ExactModalSolution::new(n, data.b0, c, cfg)?;
            Ok((sol.at_radius(b)?, build_kernel(KernelParams::new(2, n, b, c)?, cfg)?))
        })?;
        let (terms, kernels) = built.into_iter().unzip();
        Ok(ResidualSetup { b, coeffs, terms, kernels })
    }

    /// `e_n(t)` for `n = -M..=M`.
    pub fn residuals(&self, t: f64, exec: Execution) -> Vec<f64> {
        let m = self.terms.len() - 1;
        // the residual is linear in g_n and identical in shape for n and -n
        let modes: Vec<usize> = (0..=m).collect();
        let unit: Vec<f64> = exec.map(&modes, |&n| {
            let mut c = self.coeffs[m + n].clone();
            c.spatial = C64::new(1.0, 0.0);
            boundary_residual(&self.terms[n], &self.kernels[n], &c, t)
        });
        self.coeffs.iter().map(|c| c.spatial.norm() * unit[c.n.unsigned_abs() as usize]).collect()
    }

    /// `(E^(1), E^(2))`: max and sum of `e_n(t)` over `|n| <= M`.
    pub fn metrics(&self, t: f64, exec: Execution) -> (f64, f64) {
        residual_metrics(&self.residuals(t, exec))
    }
}

/// Max and sum of modal residuals.
pub fn residual_metrics(residuals: &[f64]) -> (f64, f64) {
    (residuals.iter().copied().fold(0.0, f64::max), residuals.iter().sum())
}

/// Real signal `v(t) = Re sum_k amp_k (e^{i mu_k t} - 1)`, so `v(0) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigSignal {
    pub terms: Vec<(C64, f64)>,
}

impl TrigSignal {
    pub fn value(&self, t: f64) -> f64 {
        self.terms.iter().map(|&(a, mu)| (a * cexpm1(C64::new(0.0, mu * t))).re).sum()
    }

    pub fn derivative(&self, t: f64) -> f64 {
        self.terms.iter().map(|&(a, mu)| (a * C64::new(0.0, mu) * C64::new(0.0, mu * t).exp()).re).sum()
    }

    /// `[kernel * v](t)` in closed form.
    pub fn sigma_convolution(&self, kernel: &KernelDecomposition, t: f64) -> f64 {
        let zero = C64::new(0.0, 0.0);
        let mut acc = C64::new(0.0, 0.0);
        for e in kernel.terms() {
            for &(a, mu) in &self.terms {
                // e^{i mu t} - 1 = i mu (1 * e^{i mu .})(t)
                acc += e.coeff * a * C64::new(0.0, mu) * exp_dd2(e.rate, zero, C64::new(0.0, mu), t);
            }
        }
        acc.re
    }

    /// `[omega * v](t)` with `omega = offset + c (1 * sigma)`.
    pub fn omega_convolution(&self, kernel: &KernelDecomposition, t: f64) -> f64 {
        let p = &kernel.params;
        // 1 * v
        let integral: f64 = self
            .terms
            .iter()
            .map(|&(a, mu)| (a * (exp_diff(C64::new(0.0, mu), C64::new(0.0, 0.0), t) - t)).re)
            .sum();
        let zero = C64::new(0.0, 0.0);
        let mut acc = C64::new(0.0, 0.0);
        for e in kernel.terms() {
            for &(a, mu) in &self.terms {
                // sigma * 1 * (e^{i mu .} - 1) = sigma * 1 * 1 * (i mu e^{i mu .})
                let im = C64::new(0.0, mu);
                let triple = if mu == 0.0 { zero } else { a * im * exp_dd3(e.rate, zero, zero, im, t) };
                acc += e.coeff * triple;
            }
        }
        p.omega_offset() * integral + p.c * acc.re
    }
}

/// Third divided difference of `x -> e^{x s}` at `a, b, c, d`.
fn exp_dd3(a: C64, b: C64, c: C64, d: C64, s: f64) -> C64 {
    let pts = [a, b, c, d];
    let mut best = (0, 1, 0.0);
    for i in 0..4 {
        for j in i + 1..4 {
            let dist = (pts[i] - pts[j]).norm();
            if dist > best.2 {
                best = (i, j, dist);
            }
        }
    }
    let (i, j, dist) = best;
    let rest: Vec<C64> = (0..4).filter(|&k| k != i && k != j).map(|k| pts[k]).collect();
    if dist * s >= 0.5 {
        let left = exp_dd2(pts[i], rest[0], rest[1], s);
        let right = exp_dd2(rest[0], rest[1], pts[j], s);
        return (left - right) / (pts[i] - pts[j]);
    }
    // series about d: sum_k s^k/k! h_{k-3}(a-d, b-d, c-d)
    let (u, v, w) = (a - d, b - d, c - d);
    let mut sum = C64::new(0.0, 0.0);
    // h_m(u,v,w) = sum_{i<=m} u^i h_{m-i}(v,w); track h_m(v,w) and h_m(u,v,w) incrementally
    let mut hvw = vec![C64::new(1.0, 0.0)];
    let mut huvw = vec![C64::new(1.0, 0.0)];
    let mut wp = C64::new(1.0, 0.0);
    let mut coef = s * s * s / 6.0;
    for m in 0..40 {
        let term = huvw[m] * coef;
        sum += term;
        if m > 2 && term.norm() < 1e-17 * sum.norm() {
            break;
        }
        wp *= w;
        hvw.push(v * hvw[m] + wp);
        huvw.push(u * huvw[m] + hvw[m + 1]);
        coef *= s / (m as f64 + 4.0);
    }
    (d * s).exp() * sum
}

/// Slacks of the two dissipativity inequalities over `[0, t_end]`:
///
/// ```text
/// int (omega * v) v dt           <= int v^2 dt
/// int (sigma * v) v' dt          <= (1/c) int v'^2 dt + (d-1)/(4b) v(T)^2
/// ```
///
/// returned as `(rhs - lhs)` for each, together with `sqrt(int v^2 + int v'^2)`.
pub fn dissipativity_slack(kernel: &KernelDecomposition, signal: &TrigSignal, t_end: f64, panels: usize) -> (f64, f64, f64) {
    let p = &kernel.params;
    let breaks: Vec<f64> = (0..=panels).map(|k| t_end * k as f64 / panels as f64).collect();
    let rule = crate::quadrature::composite(&breaks, 12);
    let (mut lhs1, mut v2, mut lhs2, mut dv2) = (0.0, 0.0, 0.0, 0.0);
    for (&t, &w) in rule.nodes.iter().zip(&rule.weights) {
        let v = signal.value(t);
        let dv = signal.derivative(t);
        lhs1 += w * signal.omega_convolution(kernel, t) * v;
        lhs2 += w * signal.sigma_convolution(kernel, t) * dv;
        v2 += w * v * v;
        dv2 += w * dv * dv;
    }
    let vt = signal.value(t_end);
    let rhs2 = dv2 / p.c + (p.d as f64 - 1.0) / (4.0 * p.b) * vt * vt;
    (v2 - lhs1, rhs2 - lhs2, (v2 + dv2).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::adaptive;

    #[test]
    fn sin_power_reproduces() {
        for p in 1..=6 {
            let e = sin_power_expansion(p, 2.3);
            for t in [0.0, 0.3, 1.7] {
                let v: C64 = e.iter().map(|&(a, mu)| a * C64::new(0.0, mu * t).exp()).sum();
                assert!((v.re - (2.3 * t).sin().powi(p as i32)).abs() < 1e-14);
                assert!(v.im.abs() < 1e-14);
            }
        }
    }

    #[test]
    fn divided_differences() {
        let s = 1.3;
        let f = |x: C64| (x * s).exp();
        let (a, b, c) = (C64::new(-2.0, 1.0), C64::new(-0.5, -3.0), C64::new(0.0, 4.0));
        let want = ((f(a) - f(b)) / (a - b) - (f(b) - f(c)) / (b - c)) / (a - c);
        assert!((exp_dd2(a, b, c, s) - want).norm() < 1e-14 * want.norm());
        assert!((exp_dd2(c, a, b, s) - want).norm() < 1e-14 * want.norm());
        // coincident limit: f''/2
        let z = C64::new(-0.7, 0.2);
        let want = f(z) * s * s / 2.0;
        assert!((exp_dd2(z, z, z, s) - want).norm() < 1e-15 * want.norm());
        let eps = C64::new(1e-9, 0.0);
        assert!((exp_dd2(z, z + eps, z - eps, s) - want).norm() < 1e-9 * want.norm());
        assert!((exp_diff(z, z, s) - f(z) * s).norm() < 1e-15);
    }

    #[test]
    fn zero_mode_is_mean_of_trace() {
        let d = DirichletData::standard(10.0 * PI, 2);
        let g = modal_coefficients(&d, 32, 256).unwrap();
        let mean = adaptive(|phi| d.trace(phi), 0.0, 2.0 * PI, 1e-15, 1e-15).unwrap() / (2.0 * PI);
        assert!((g[32].spatial.re - mean).abs() < 1e-12);
        for c in &g {
            if c.n.abs() > 32 {
                unreachable!();
            }
            let mirror = &g[(32 - c.n) as usize];
            assert!((mirror.spatial - c.spatial.conj()).norm() < 1e-15);
        }
        assert!(modal_coefficients(&d, 32, 100).is_err());
        let zero = DirichletData { a1: 0.0, ..d };
        assert!(modal_coefficients(&zero, 8, 64).unwrap().iter().all(|c| c.spatial.norm() == 0.0));
    }

    #[test]
    fn high_modes_are_negligible() {
        let d = DirichletData::standard(10.0 * PI, 2);
        let g = modal_coefficients(&d, 64, 512).unwrap();
        for c in &g {
            if c.n.abs() > 32 {
                assert!(c.spatial.norm() < 1e-14, "n={} |g|={}", c.n, c.spatial.norm());
            }
        }
    }

    #[test]
    fn boundary_values_recovered() {
        let cfg = BranchCutConfig::default();
        let d = DirichletData::standard(10.0 * PI, 2);
        let coeffs = modal_coefficients(&d, 6, 64).unwrap();
        for n in [0usize, 1, 4, 6] {
            let sol = ExactModalSolution::new(n, 2.0, 5.0, &cfg).unwrap();
            let terms = sol.at_radius(2.0).unwrap();
            let coeff = &coeffs[6 + n];
            for t in [0.05, 0.5, 1.3, 4.9] {
                let v = terms.eval(coeff, 5.0, t);
                let g = coeff.value(t);
                assert!((v.value - g).norm() < 1e-8 * coeff.spatial.norm(), "n={n} t={t}");
            }
        }
    }

    #[test]
    fn causality() {
        let cfg = BranchCutConfig::default();
        let d = DirichletData::standard(10.0 * PI, 2);
        let coeffs = modal_coefficients(&d, 3, 64).unwrap();
        let sol = ExactModalSolution::new(3, 2.0, 5.0, &cfg).unwrap();
        let terms = sol.at_radius(3.0).unwrap();
        for t in [0.0, 0.1, 0.19999] {
            let v = terms.eval(&coeffs[6], 5.0, t);
            assert_eq!((v.value, v.dr, v.dt), (C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)));
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let cfg = BranchCutConfig::default();
        let d = DirichletData::standard(3.0, 2);
        let coeffs = modal_coefficients(&d, 5, 64).unwrap();
        let c = 5.0;
        for n in [0usize, 2, 5] {
            let sol = ExactModalSolution::new(n, 2.0, c, &cfg).unwrap();
            let coeff = &coeffs[5 + n];
            for (r, t) in [(2.4, 0.9), (3.1, 2.0), (2.05, 0.3)] {
                let h = 1e-5;
                let at = |r: f64, t: f64| sol.at_radius(r).unwrap().eval(coeff, c, t).value;
                let v = sol.at_radius(r).unwrap().eval(coeff, c, t);
                let fd_t = (at(r, t + h) - at(r, t - h)) / (2.0 * h);
                let fd_r = (at(r + h, t) - at(r - h, t)) / (2.0 * h);
                let scale = coeff.spatial.norm();
                assert!((v.dt - fd_t).norm() < 1e-6 * scale.max(v.dt.norm()), "n={n} r={r} t={t}: {} vs {fd_t}", v.dt);
                assert!((v.dr - fd_r).norm() < 1e-6 * scale.max(v.dr.norm()), "n={n} r={r} t={t}: {} vs {fd_r}", v.dr);
            }
        }
    }

    #[test]
    fn kernel_matches_high_precision_inversion() {
        // (n, r, s, H_n(r, beta0 + s)) for b0 = 2, c = 5; mpmath Talbot inversion at 40 digits
        let table = [
            (0, 2.3, 0.05, 0.033978335501323838),
            (0, 2.3, 1.0, 0.0089853595630627153),
            (0, 2.3, 2.0, 0.0043603124661286043),
            (0, 5.0, 0.05, 0.1094250544291104),
            (0, 5.0, 1.0, 0.040150877978058995),
            (0, 5.0, 2.0, 0.022174586326426343),
            (3, 2.3, 0.05, -1.1291395752512065),
            (3, 2.3, 1.0, 0.014335705701118819),
            (3, 2.3, 2.0, -0.00031514944672808089),
            (3, 5.0, 0.05, -3.1905636441702556),
            (3, 5.0, 1.0, 0.038238925296751706),
            (3, 5.0, 2.0, -0.0009472102930567692),
            (7, 2.3, 0.05, -4.9370825734485448),
            (7, 2.3, 1.0, -0.0035837975636564879),
            (7, 2.3, 2.0, -4.5449669643802497e-6),
            (7, 5.0, 0.05, -6.4212397741913604),
            (7, 5.0, 1.0, 0.00010472962782548791),
            (7, 5.0, 2.0, -4.1732586828364243e-6),
            (10, 2.3, 0.05, -7.1609270341050315),
            (10, 2.3, 1.0, -0.0019558954675343689),
            (10, 2.3, 2.0, -6.3425273537646078e-7),
            (10, 5.0, 0.05, 1.1175555130566122),
            (10, 5.0, 1.0, 0.0066646723631662047),
            (10, 5.0, 2.0, 2.2087513204595893e-6),
        ];
        let cfg = BranchCutConfig::default();
        for &(n, r, s, want) in &table {
            let sol = ExactModalSolution::new(n, 2.0, 5.0, &cfg).unwrap();
            let got = sol.eval_hn(r, (r - 2.0) / 5.0 + s).unwrap();
            let peak = sol.eval_hn(r, (r - 2.0) / 5.0 + 0.05).unwrap().abs();
            assert!((got - want).abs() < 1e-9 * peak.max(want.abs()), "n={n} r={r} s={s}: {got} vs {want}");
        }
    }

    #[test]
    fn kernel_matches_talbot() {
        let cfg = BranchCutConfig::default();
        for n in 0..=10usize {
            let sol = ExactModalSolution::new(n, 2.0, 5.0, &cfg).unwrap();
            for r in [2.3, 3.0, 5.0] {
                for s in [0.05, 0.2, 0.5] {
                    let got = sol.eval_hn(r, (r - 2.0) / 5.0 + s).unwrap();
                    let want = crate::talbot::exact_kernel_talbot(n, 2.0, 5.0, r, s).unwrap();
                    assert!((got - want).abs() < 1e-6 * want.abs(), "n={n} r={r} s={s}: {got} vs {want}");
                }
            }
        }
        assert!(sol_err_inside());
    }

    fn sol_err_inside() -> bool {
        let sol = ExactModalSolution::new(2, 2.0, 5.0, &BranchCutConfig::default()).unwrap();
        sol.eval_hn(2.0, 0.1).is_err() && sol.at_radius(1.9).is_err()
    }

    #[test]
    fn residual_vanishes_for_zero_mode_data() {
        let cfg = BranchCutConfig::default();
        let sol = ExactModalSolution::new(3, 2.0, 5.0, &cfg).unwrap();
        let kernel = build_kernel(KernelParams::new(2, 3, 2.5, 5.0).unwrap(), &cfg).unwrap();
        let coeff = ModalBoundaryCoefficient { n: 3, spatial: C64::new(0.0, 0.0), temporal: sin_power_expansion(2, PI) };
        assert_eq!(boundary_residual(&sol.at_radius(2.5).unwrap(), &kernel, &coeff, 1.0), 0.0);
        assert_eq!(residual_metrics(&[]), (0.0, 0.0));
    }

    #[test]
    fn residual_small_in_published_setting() {
        let cfg = BranchCutConfig::default();
        let d = DirichletData::standard(10.0 * PI, 2);
        let setup = ResidualSetup::new(&d, 32, 256, 2.75, 5.0, &cfg, Execution::default()).unwrap();
        let (e1, e2) = setup.metrics(1.0, Execution::default());
        assert!(e1 <= e2 && e2 < 1e-10, "{e1} {e2}");
    }

    #[test]
    fn trig_signal_convolutions() {
        let cfg = BranchCutConfig::default();
        let kernel = build_kernel(KernelParams::new(2, 2, 3.0, 5.0).unwrap(), &cfg).unwrap();
        let sig = TrigSignal { terms: vec![(C64::new(0.7, -0.2), 3.0), (C64::new(-0.4, 0.0), 0.0), (C64::new(0.1, 0.5), 11.0)] };
        for t in [0.3, 1.7] {
            let want_s = adaptive(|u| kernel.sigma(t - u) * sig.value(u), 0.0, t, 1e-13, 1e-12).unwrap();
            assert!((sig.sigma_convolution(&kernel, t) - want_s).abs() < 1e-9 * want_s.abs().max(1.0));
            let want_o = adaptive(|u| kernel.omega(t - u) * sig.value(u), 0.0, t, 1e-13, 1e-12).unwrap();
            assert!((sig.omega_convolution(&kernel, t) - want_o).abs() < 1e-9 * want_o.abs().max(1.0), "{} {want_o}", sig.omega_convolution(&kernel, t));
        }
        let (s1, s2, norm) = dissipativity_slack(&kernel, &sig, 2.0, 16);
        assert!(s1 > -1e-8 * norm && s2 > -1e-8 * norm);
    }
}
