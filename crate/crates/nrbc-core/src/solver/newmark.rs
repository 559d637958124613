//! Newmark time integration of
//!
//! ```text
//! M v'' + alpha E v' + K v + mu E v - gain (sigma * 1^T v) 1 = h,     E = 1 1^T
//! ```
//!
//! The convolution at `t_{m+1}` is split into the trapezoidal current panel
//! `(dt/2)(sigma(0) s^{m+1} + sigma(dt) s^m)`, whose implicit part is folded
//! into the system matrix, and the history before `t_m`, which comes from the
//! recursive convolver.

use crate::convolution::KernelConvolver;
use crate::error::{Error, Result};
use crate::kernel::KernelDecomposition;
use nalgebra::{DMatrix, DVector, Dyn, LU};

/// Newmark parameters `theta` (displacement) and `vartheta` (velocity).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewmarkParams {
    pub theta: f64,
    pub vartheta: f64,
    /// Skip the unconditional-stability check.
    pub allow_unstable: bool,
}

impl Default for NewmarkParams {
    fn default() -> Self {
        NewmarkParams { theta: 0.25, vartheta: 0.5, allow_unstable: false }
    }
}

impl NewmarkParams {
    pub fn unconditionally_stable(&self) -> bool {
        self.vartheta >= 0.5 && self.theta >= 0.25 * (0.5 + self.vartheta).powi(2)
    }

    pub fn check(&self) -> Result<()> {
        if !(self.theta.is_finite() && self.vartheta.is_finite()) {
            return Err(Error::Config("Newmark parameters must be finite".into()));
        }
        if !self.allow_unstable && !self.unconditionally_stable() {
            return Err(Error::Config(format!(
                "theta={} vartheta={} lie outside the unconditional stability region (vartheta >= 1/2, theta >= (1/2 + vartheta)^2/4)",
                self.theta, self.vartheta
            )));
        }
        Ok(())
    }
}

/// Boundary convolution coupling `-gain (kernel * 1^T v) 1`.
#[derive(Debug, Clone)]
pub struct Coupling {
    pub gain: f64,
    pub kernel: KernelDecomposition,
}

/// The second-order system without its load.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub mass: DMatrix<f64>,
    /// `alpha` in `alpha E v'`.
    pub damping: f64,
    pub stiffness: DMatrix<f64>,
    /// `mu` in `mu E v`.
    pub boundary_stiffness: f64,
    pub coupling: Option<Coupling>,
}

impl LinearSystem {
    pub fn size(&self) -> usize {
        self.mass.nrows()
    }
}

/// Newmark state at `t_m = m dt`.
pub struct NewmarkState {
    system: LinearSystem,
    params: NewmarkParams,
    dt: f64,
    step: usize,
    pub v: DVector<f64>,
    pub vd: DVector<f64>,
    pub vdd: DVector<f64>,
    lhs: LU<f64, Dyn, Dyn>,
    /// Coefficient of `E` in the effective stiffness `C`.
    e_coef: f64,
    convolver: Option<KernelConvolver>,
    sigma_dt: f64,
    load: Box<dyn Fn(f64) -> DVector<f64> + Send + Sync>,
    work: [DVector<f64>; 3],
}

impl std::fmt::Debug for NewmarkState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NewmarkState").field("step", &self.step).field("dt", &self.dt).field("params", &self.params).finish()
    }
}

fn ones_dot(x: &DVector<f64>) -> f64 {
    x.iter().sum()
}

fn add_ones(x: &mut DVector<f64>, a: f64) {
    x.iter_mut().for_each(|v| *v += a);
}

impl NewmarkState {
    /// Start from `v(0) = v0`, `v'(0) = v1`; `v''(0)` solves the system at `t = 0`,
    /// where the convolution vanishes.
    pub fn new(
        system: LinearSystem,
        load: Box<dyn Fn(f64) -> DVector<f64> + Send + Sync>,
        v0: DVector<f64>,
        v1: DVector<f64>,
        dt: f64,
        params: NewmarkParams,
    ) -> Result<Self> {
        params.check()?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Config(format!("time step must be positive, got {dt}")));
        }
        let n = system.size();
        if v0.len() != n || v1.len() != n {
            return Err(Error::Config("initial vectors do not match the system size".into()));
        }
        let (e_coef, convolver, sigma_dt) = match &system.coupling {
            Some(cp) => {
                let s0 = cp.kernel.sigma(0.0);
                (system.boundary_stiffness - cp.gain * 0.5 * dt * s0, Some(KernelConvolver::new(&cp.kernel, dt)?), cp.kernel.sigma(dt))
            }
            None => (system.boundary_stiffness, None, 0.0),
        };
        let mut lhs = &system.mass + &system.stiffness * (params.theta * dt * dt);
        lhs.add_scalar_mut(params.vartheta * dt * system.damping + params.theta * dt * dt * e_coef);
        let lhs = lhs.lu();
        if !lhs.is_invertible() || lhs.u().diagonal().iter().any(|d| d.abs() < 1e-14 * lhs.u().amax()) {
            return Err(Error::Config("singular Newmark system matrix".into()));
        }
        let mut rhs = load(0.0) - &system.stiffness * &v0;
        add_ones(&mut rhs, -system.damping * ones_dot(&v1) - system.boundary_stiffness * ones_dot(&v0));
        let vdd = system.mass.clone().lu().solve(&rhs).ok_or_else(|| Error::Config("singular mass matrix".into()))?;
        let work = [DVector::zeros(n), DVector::zeros(n), DVector::zeros(n)];
        Ok(NewmarkState { system, params, dt, step: 0, v: v0, vd: v1, vdd, lhs, e_coef, convolver, sigma_dt, load, work })
    }

    pub fn time(&self) -> f64 {
        self.step as f64 * self.dt
    }

    pub fn step_index(&self) -> usize {
        self.step
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn system(&self) -> &LinearSystem {
        &self.system
    }

    /// `1^T v`, the boundary signal entering the convolution.
    pub fn boundary_sum(&self) -> f64 {
        ones_dot(&self.v)
    }

    /// Effective stiffness `C = K + (mu - gain dt/2 sigma(0)) E` applied to `x`.
    pub fn apply_c(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut out = &self.system.stiffness * x;
        add_ones(&mut out, self.e_coef * ones_dot(x));
        out
    }

    /// Advance to `t_{m+1}`.
    pub fn advance(&mut self) -> Result<()> {
        let (dt, th, vt) = (self.dt, self.params.theta, self.params.vartheta);
        let t1 = (self.step + 1) as f64 * dt;
        let s_old = ones_dot(&self.v);
        let mut f = (self.load)(t1);
        if let (Some(conv), Some(cp)) = (&self.convolver, &self.system.coupling) {
            let g = conv.deferred_history(dt)? + 0.5 * dt * self.sigma_dt * s_old;
            add_ones(&mut f, cp.gain * g);
        }
        let [pred_v, pred_vd, kv] = &mut self.work;
        pred_v.copy_from(&self.v);
        pred_v.axpy(dt, &self.vd, 1.0);
        pred_v.axpy(0.5 * (1.0 - 2.0 * th) * dt * dt, &self.vdd, 1.0);
        pred_vd.copy_from(&self.vd);
        pred_vd.axpy((1.0 - vt) * dt, &self.vdd, 1.0);
        kv.gemv(1.0, &self.system.stiffness, pred_v, 0.0);
        f -= &*kv;
        add_ones(&mut f, -self.system.damping * ones_dot(pred_vd) - self.e_coef * ones_dot(pred_v));
        if !self.lhs.solve_mut(&mut f) {
            return Err(Error::Integration { step: self.step + 1, detail: "linear solve failed".into() });
        }
        self.v.copy_from(pred_v);
        self.v.axpy(th * dt * dt, &f, 1.0);
        self.vd.copy_from(pred_vd);
        self.vd.axpy(vt * dt, &f, 1.0);
        self.vdd = f;
        if !self.v.iter().chain(self.vd.iter()).all(|x| x.is_finite()) {
            return Err(Error::Integration { step: self.step + 1, detail: "non-finite solution".into() });
        }
        if let Some(conv) = &mut self.convolver {
            conv.convolve_step(s_old, ones_dot(&self.v), dt)?;
        }
        self.step += 1;
        Ok(())
    }
}
