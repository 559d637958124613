//! Nonreflecting boundary kernels `sigma_nu(t)` and `omega_nu(t)`.
//!
//! For mode `n` on a boundary of radius `b` with wave speed `c`,
//!
//! ```text
//! sigma_nu(t) = (c/b^2) [ sum_j z_j e^{c t z_j / b} + (-1)^n int_0^inf W_n(r) e^{-c t r / b} dr ]
//! ```
//!
//! where `z_j` are the zeros of `K_nu` and the integral is present only in two
//! dimensions (`nu = n`). In three dimensions `nu = n + 1/2` and the pole sum
//! is exact. Every term is an exponential `coeff * e^{rate t}`, which is what
//! makes recursive convolution possible.

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::quadrature;
use crate::specfun::{bessel_ik_log, find_zeros, BesselOrder, ZeroSet, DEFAULT_ZERO_TOL, EYE_A};
use num_complex::Complex64 as C64;
use std::f64::consts::PI;
use std::io::Write;

/// Physical parameters of one kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams {
    /// Spatial dimension, 2 or 3.
    pub d: u8,
    /// Mode index.
    pub n: usize,
    /// Artificial boundary radius.
    pub b: f64,
    /// Wave speed.
    pub c: f64,
}

impl KernelParams {
    pub fn new(d: u8, n: usize, b: f64, c: f64) -> Result<Self> {
        let p = KernelParams { d, n, b, c };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d != 2 && self.d != 3 {
            return Err(Error::Config(format!("dimension must be 2 or 3, got {}", self.d)));
        }
        if !(self.b > 0.0 && self.c > 0.0) {
            return Err(Error::Config(format!("need b > 0 and c > 0, got b={} c={}", self.b, self.c)));
        }
        Ok(())
    }

    pub fn order(&self) -> BesselOrder {
        BesselOrder::for_dimension(self.d, self.n)
    }

    /// `omega_nu(0) = -(d-1) c / (2b)`.
    pub fn omega_offset(&self) -> f64 {
        -(f64::from(self.d) - 1.0) * self.c / (2.0 * self.b)
    }
}

/// Panel layout of the branch-cut rule on `[0, r_hi]`.
///
/// `ln W_n(r)` changes at rate about `2 Theta'(r/n) = 2 sqrt(1 + (r/n)^2) / (r/n)`,
/// so for `n >= 1` the breakpoints are spaced uniformly in the exponent
/// `xi(r) = 2 n Theta(r/n)` with step `exponent_step`, starting where `W_n` has
/// dropped by `e^{-left_cutoff}` below its peak. This grades the panels
/// geometrically toward `r = 0`; away from the peak the step grows by the factor
/// `1 + exponent_growth |xi|` because the integrand is close to a pure
/// exponential there. For `n = 0`, where `W_0 ~ 1/ln^2 r` near the origin, `[floor_n0, 1]`
/// is graded geometrically by `grading_ratio` and `[1, r_hi]` uses the exponent
/// `xi = 2 (r - 1)`.
/// The upper limit is `n a + tail` for `n >= 5` and `small_n_upper` below that.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchCutConfig {
    pub nodes_per_panel: usize,
    pub exponent_step: f64,
    /// Relative growth of the step with distance `|xi|` from the peak.
    pub exponent_growth: f64,
    pub left_cutoff: f64,
    pub tail: f64,
    pub small_n_upper: f64,
    pub grading_ratio: f64,
    pub floor_n0: f64,
}

impl Default for BranchCutConfig {
    fn default() -> Self {
        BranchCutConfig {
            nodes_per_panel: 16,
            exponent_step: 3.0,
            exponent_growth: 0.1,
            left_cutoff: 45.0,
            tail: 25.0,
            small_n_upper: 30.0,
            grading_ratio: 0.1,
            floor_n0: 1e-14,
        }
    }
}

fn theta_unchecked(kappa: f64) -> f64 {
    let s = (1.0 + kappa * kappa).sqrt();
    s + (kappa / (1.0 + s)).ln()
}

/// Solve `2 n Theta(r/n) = xi` for `r` by bisection in `ln r`.
fn exponent_inverse(n: usize, xi: f64) -> f64 {
    let nf = n as f64;
    let (mut lo, mut hi) = ((-700.0f64).max(xi / (2.0 * nf) - 5.0), (xi.abs() + 10.0 * nf + 10.0).ln());
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if 2.0 * nf * theta_unchecked(mid.exp() / nf) < xi {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (0.5 * (lo + hi)).exp()
}

impl BranchCutConfig {
    /// Truncation interval `[0, r_hi]` for mode `n`.
    pub fn upper_limit(&self, n: usize) -> f64 {
        if n >= 5 {
            n as f64 * EYE_A + self.tail
        } else {
            self.small_n_upper.max(n as f64 * EYE_A + self.tail)
        }
    }

    /// Panel breakpoints for mode `n`, strictly increasing from 0.
    pub fn breaks(&self, n: usize) -> Vec<f64> {
        let hi = self.upper_limit(n);
        let mut breaks = vec![0.0];
        if n == 0 {
            let mut graded = vec![1.0];
            while graded.last().unwrap() * self.grading_ratio > self.floor_n0 {
                let next = graded.last().unwrap() * self.grading_ratio;
                graded.push(next);
            }
            breaks.extend(graded.iter().rev());
            // beyond r = 1, W_0 decays like r e^{-2r}: the exponent is xi = 2 (r - 1)
            let mut xi = self.exponent_step;
            while 1.0 + 0.5 * xi < hi - 0.25 * self.exponent_step {
                breaks.push(1.0 + 0.5 * xi);
                xi += self.exponent_step * (1.0 + self.exponent_growth * xi);
            }
            breaks.push(hi);
        } else {
            let mut xi = -self.left_cutoff;
            loop {
                let r = exponent_inverse(n, xi);
                if r >= hi - 0.25 * self.exponent_step {
                    break;
                }
                breaks.push(r);
                xi += self.exponent_step * (1.0 + self.exponent_growth * xi.abs());
            }
            breaks.push(hi);
        }
        breaks
    }

    /// Composite Gauss-Legendre rule over [`Self::breaks`].
    pub fn rule(&self, n: usize) -> quadrature::Rule {
        quadrature::composite(&self.breaks(n), self.nodes_per_panel)
    }
}

/// Branch-cut nodes, weights and density values `W_n(r_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchCutRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub kernel_values: Vec<f64>,
    pub truncation: (f64, f64),
}

impl BranchCutRule {
    pub fn build(n: usize, cfg: &BranchCutConfig) -> Result<Self> {
        let rule = cfg.rule(n);
        let kernel_values = rule.nodes.iter().map(|&r| eval_w(n, r)).collect::<Result<Vec<_>>>()?;
        Ok(BranchCutRule {
            nodes: rule.nodes,
            weights: rule.weights,
            kernel_values,
            truncation: (0.0, cfg.upper_limit(n)),
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// One exponential term `coeff * e^{rate t}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpTerm {
    pub rate: C64,
    pub coeff: C64,
}

/// Pole sum plus optional branch-cut rule for `sigma_nu` and `omega_nu`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelDecomposition {
    pub params: KernelParams,
    pub zeros: ZeroSet,
    /// Pole terms: rate `c z_j / b`, coefficient `(c/b^2) z_j`.
    pub poles: Vec<ExpTerm>,
    /// Branch cut with its sign `(-1)^n`; present iff `d = 2`.
    pub branch: Option<(f64, BranchCutRule)>,
    /// Branch-cut nodes as exponential terms: rate `-c r_i / b`,
    /// coefficient `(-1)^n (c/b^2) w_i W_n(r_i)`.
    pub nodes: Vec<ExpTerm>,
}

/// `Theta(kappa) = sqrt(1+kappa^2) + ln(kappa / (1 + sqrt(1+kappa^2)))`.
pub fn theta(kappa: f64) -> Result<f64> {
    if !(kappa > 0.0) {
        return Err(Error::domain("theta", format!("kappa must be positive, got {kappa}")));
    }
    let s = (1.0 + kappa * kappa).sqrt();
    Ok(s + (kappa / (1.0 + s)).ln())
}

/// `W_n(r) = 1 / (K_n(r)^2 + pi^2 I_n(r)^2)`, evaluated in log space.
pub fn eval_w(n: usize, r: f64) -> Result<f64> {
    Ok(log_w(n, r)?.exp())
}

/// `ln W_n(r)`.
pub fn log_w(n: usize, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::domain("eval_W", format!("r must be positive, got {r}")));
    }
    let ik = bessel_ik_log(n as f64, r)?;
    Ok(-log_sum_exp(2.0 * ik.log_k, 2.0 * (ik.log_i + PI.ln())))
}

pub(crate) fn log_sum_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Uniform asymptotic approximation `n sqrt(1+kappa^2)/pi * sech(2 n Theta(kappa))`
/// of `W_n(n kappa)`.
pub fn eval_w_asymptotic(n: usize, kappa: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::domain("eval_W_asymptotic", "n must be at least 1"));
    }
    let th = theta(kappa)?;
    let x = 2.0 * n as f64 * th;
    // sech x = 2 e^{-|x|} / (1 + e^{-2|x|})
    let e = (-x.abs()).exp();
    Ok(n as f64 * (1.0 + kappa * kappa).sqrt() / PI * 2.0 * e / (1.0 + e * e))
}

/// Build the decomposition of `sigma_nu`, `omega_nu` for `params`.
pub fn build_kernel(params: KernelParams, cfg: &BranchCutConfig) -> Result<KernelDecomposition> {
    params.validate()?;
    let zeros = find_zeros(params.order(), DEFAULT_ZERO_TOL)?;
    let (b, c) = (params.b, params.c);
    let poles = zeros
        .zeros
        .iter()
        .map(|&z| ExpTerm { rate: z * (c / b), coeff: z * (c / (b * b)) })
        .collect();
    let (branch, nodes) = if params.d == 2 {
        let rule = BranchCutRule::build(params.n, cfg)?;
        let sign = if params.n % 2 == 0 { 1.0 } else { -1.0 };
        let nodes = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .zip(&rule.kernel_values)
            .map(|((&r, &w), &wn)| ExpTerm {
                rate: C64::new(-c * r / b, 0.0),
                coeff: C64::new(sign * c / (b * b) * w * wn, 0.0),
            })
            .collect();
        (Some((sign, rule)), nodes)
    } else {
        (None, Vec::new())
    };
    Ok(KernelDecomposition { params, zeros, poles, branch, nodes })
}

/// Kernels for several modes, optionally in parallel.
pub fn build_kernels(params: &[KernelParams], cfg: &BranchCutConfig, exec: Execution) -> Result<Vec<KernelDecomposition>> {
    exec.try_map(params, |&p| build_kernel(p, cfg))
}

/// `e^{z} - 1` without cancellation for small `z`.
pub(crate) fn cexpm1(z: C64) -> C64 {
    let (s, c) = z.im.sin_cos();
    let half = (0.5 * z.im).sin();
    let em1 = z.re.exp_m1();
    // e^{x}(cos y + i sin y) - 1 = expm1(x) cos y - 2 sin^2(y/2) + i e^{x} sin y
    C64::new(em1 * c - 2.0 * half * half, (em1 + 1.0) * s)
}

impl KernelDecomposition {
    /// All exponential terms: poles first, then branch-cut nodes.
    pub fn terms(&self) -> impl Iterator<Item = &ExpTerm> {
        self.poles.iter().chain(self.nodes.iter())
    }

    pub fn term_count(&self) -> usize {
        self.poles.len() + self.nodes.len()
    }

    /// Unrounded complex sum for `sigma_nu(t)`.
    pub fn sigma_raw(&self, t: f64) -> C64 {
        self.terms().map(|e| e.coeff * (e.rate * t).exp()).sum()
    }

    /// `sigma_nu(t)`.
    pub fn sigma(&self, t: f64) -> f64 {
        self.sigma_raw(t).re
    }

    /// `omega_nu(t)`.
    pub fn omega(&self, t: f64) -> f64 {
        let KernelParams { b, c, .. } = self.params;
        let mut acc: f64 = self.poles.iter().map(|p| cexpm1(p.rate * t).re).sum();
        if let Some((sign, rule)) = &self.branch {
            let s: f64 = rule
                .nodes
                .iter()
                .zip(&rule.weights)
                .zip(&rule.kernel_values)
                .map(|((&r, &w), &wn)| -w * wn * (-c * t * r / b).exp_m1() / r)
                .sum();
            acc += sign * s;
        }
        self.params.omega_offset() + c / b * acc
    }

    /// Write poles and nodes as CSV: `kind, index, re, im, rate_re, rate_im, coeff_re, coeff_im, weight, w_n`.
    pub fn write_csv(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "kind,index,re,im,rate_re,rate_im,coeff_re,coeff_im,weight,w_n")?;
        for (j, (z, p)) in self.zeros.zeros.iter().zip(&self.poles).enumerate() {
            writeln!(
                out,
                "pole,{j},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},,",
                z.re, z.im, p.rate.re, p.rate.im, p.coeff.re, p.coeff.im
            )?;
        }
        if let Some((_, rule)) = &self.branch {
            for (i, e) in self.nodes.iter().enumerate() {
                writeln!(
                    out,
                    "node,{i},{:.16e},0,{:.16e},0,{:.16e},0,{:.16e},{:.16e}",
                    rule.nodes[i], e.rate.re, e.coeff.re, rule.weights[i], rule.kernel_values[i]
                )?;
            }
        }
        Ok(())
    }
}
