//! Recursive convolution of a kernel given as a sum of exponentials against a
//! sampled signal, with O(1) work and memory per step.
//!
//! Each exponential `e^{lambda t}` carries a state
//! `f(t) = int_0^t e^{lambda (t - tau)} g(tau) dtau`. Over one step the signal is
//! taken linear and integrated exactly against the exponential:
//!
//! ```text
//! f(t + dt) = e^{z} f(t) + dt (phi1(z) - phi2(z)) g(t) + dt phi2(z) g(t + dt),   z = lambda dt
//! ```
//!
//! with `phi1(z) = (e^z - 1)/z`, `phi2(z) = (e^z - 1 - z)/z^2`.

use crate::error::{Error, Result};
use crate::kernel::{cexpm1, ExpTerm, KernelDecomposition};
use num_complex::Complex64 as C64;

/// Below this modulus the phi-functions are summed from their Taylor series.
const PHI_SERIES_RADIUS: f64 = 0.5;

/// `(phi1(z), phi2(z))`.
pub fn phi12(z: C64) -> (C64, C64) {
    if z.norm() < PHI_SERIES_RADIUS {
        // phi1 = sum z^k/(k+1)!, phi2 = sum z^k/(k+2)!
        let mut p1 = C64::new(0.0, 0.0);
        let mut p2 = C64::new(0.0, 0.0);
        let mut term = C64::new(1.0, 0.0);
        for k in 0..24 {
            p1 += term / fact(k + 1);
            p2 += term / fact(k + 2);
            term *= z;
        }
        (p1, p2)
    } else {
        let p1 = cexpm1(z) / z;
        (p1, (p1 - 1.0) / z)
    }
}

fn fact(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// One exponential convolution state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpState {
    pub rate: C64,
    pub f: C64,
    pub t: f64,
}

impl ExpState {
    pub fn new(rate: C64) -> Self {
        ExpState { rate, f: C64::new(0.0, 0.0), t: 0.0 }
    }

    /// Advance by `dt` with signal values `g_left = g(t)`, `g_right = g(t + dt)`.
    pub fn advance(&self, g_left: C64, g_right: C64, dt: f64) -> Result<ExpState> {
        if !(dt > 0.0) {
            return Err(Error::domain("advance", format!("dt must be positive, got {dt}")));
        }
        let w = StepWeights::for_rate(self.rate, dt);
        Ok(ExpState { rate: self.rate, f: w.decay * self.f + w.left * g_left + w.right * g_right, t: self.t + dt })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct StepWeights {
    decay: C64,
    left: C64,
    right: C64,
}

impl StepWeights {
    fn for_rate(rate: C64, dt: f64) -> Self {
        let z = rate * dt;
        let (p1, p2) = phi12(z);
        StepWeights { decay: z.exp(), left: (p1 - p2) * dt, right: p2 * dt }
    }
}

/// Convolution of one kernel with a scalar signal, marched in time.
#[derive(Debug, Clone)]
pub struct KernelConvolver {
    terms: Vec<ExpTerm>,
    pole_count: usize,
    states: Vec<C64>,
    t: f64,
    dt: f64,
    weights: Vec<StepWeights>,
}

impl KernelConvolver {
    /// A convolver for `kernel` with fixed step `dt`.
    pub fn new(kernel: &KernelDecomposition, dt: f64) -> Result<Self> {
        Self::from_terms(kernel.terms().copied().collect(), kernel.poles.len(), dt)
    }

    /// A convolver for an arbitrary exponential sum `sum coeff e^{rate t}`.
    pub fn from_terms(terms: Vec<ExpTerm>, pole_count: usize, dt: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::domain("KernelConvolver", format!("dt must be positive, got {dt}")));
        }
        let weights = terms.iter().map(|e| StepWeights::for_rate(e.rate, dt)).collect();
        let states = vec![C64::new(0.0, 0.0); terms.len()];
        Ok(KernelConvolver { terms, pole_count, states, t: 0.0, dt, weights })
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn pole_states(&self) -> &[C64] {
        &self.states[..self.pole_count]
    }

    pub fn node_states(&self) -> &[C64] {
        &self.states[self.pole_count..]
    }

    pub fn reset(&mut self) {
        self.states.iter_mut().for_each(|f| *f = C64::new(0.0, 0.0));
        self.t = 0.0;
    }

    fn check_dt(&self, dt: f64) -> Result<()> {
        if (dt - self.dt).abs() > 1e-12 * self.dt {
            return Err(Error::Invariant(format!("convolver built for dt={} used with dt={dt}", self.dt)));
        }
        Ok(())
    }

    /// Advance every state over `[t, t + dt]` and return `[kernel * g](t + dt)`.
    pub fn convolve_step(&mut self, g_left: f64, g_right: f64, dt: f64) -> Result<f64> {
        self.check_dt(dt)?;
        let mut acc = C64::new(0.0, 0.0);
        for ((f, w), e) in self.states.iter_mut().zip(&self.weights).zip(&self.terms) {
            *f = w.decay * *f + w.left * g_left + w.right * g_right;
            acc += e.coeff * *f;
        }
        self.t += dt;
        Ok(acc.re)
    }

    /// `int_0^{t} kernel(t + dt - tau) g(tau) dtau` from the stored states, without
    /// advancing them.
    pub fn deferred_history(&self, dt: f64) -> Result<f64> {
        self.check_dt(dt)?;
        let acc: C64 = self
            .states
            .iter()
            .zip(&self.weights)
            .zip(&self.terms)
            .map(|((f, w), e)| e.coeff * w.decay * *f)
            .sum();
        Ok(acc.re)
    }

    /// The kernel at lag `s`.
    pub fn kernel_at(&self, s: f64) -> f64 {
        self.terms.iter().map(|e| (e.coeff * (e.rate * s).exp()).re).sum()
    }
}

/// Convolution of `kernel` with the piecewise-linear interpolant of `g`
/// (samples at `k dt`), evaluated at every sample time by direct product Gauss
/// quadrature on each panel. Cost O(N^2); used as a reference.
pub fn direct_convolution(kernel: impl Fn(f64) -> f64 + Sync, g: &[f64], dt: f64, points: usize) -> Vec<f64> {
    let rule = crate::quadrature::gauss_legendre(points).mapped(0.0, 1.0);
    let nt = g.len().saturating_sub(1);
    // table[k][q] = kernel(k dt + dt (1 - xi_q))
    let table: Vec<Vec<f64>> = (0..nt)
        .map(|k| rule.nodes.iter().map(|&xi| kernel((k as f64 + 1.0 - xi) * dt)).collect())
        .collect();
    let mut out = vec![0.0; g.len()];
    for m in 1..=nt {
        let mut acc = 0.0;
        for j in 0..m {
            let row = &table[m - j - 1];
            let (gl, gr) = (g[j], g[j + 1]);
            let mut panel = 0.0;
            for q in 0..rule.len() {
                let xi = rule.nodes[q];
                panel += rule.weights[q] * row[q] * (gl + (gr - gl) * xi);
            }
            acc += panel;
        }
        out[m] = acc * dt;
    }
    out
}
