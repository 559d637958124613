//! One Fourier/spherical-harmonic mode: lifting of the Dirichlet data, time
//! marching, snapshots, discrete error norms and the interior energy.

use super::galerkin::{beta, lift, Geometry, SpectralOperator};
use super::newmark::{Coupling, LinearSystem, NewmarkParams, NewmarkState};
use crate::error::{Error, Result};
use crate::kernel::{build_kernel, BranchCutConfig, KernelDecomposition, KernelParams};
use nalgebra::DVector;
use std::sync::Arc;

/// `[g(t), g'(t), g''(t)]`.
pub type BoundaryData = Arc<dyn Fn(f64) -> [f64; 3] + Send + Sync>;
/// `f(r, t)`.
pub type Forcing = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
/// A function of `r`.
pub type Profile = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// The modal problem
///
/// ```text
/// u_tt - c^2 r^{1-d} (r^{d-1} u_r)_r + c^2 beta_n u / r^2 = f,   b0 < r < b
/// u(b0, t) = g(t),   (u_t/c + u_r + (d-1) u/(2r))(b, t) = (sigma * u(b, .))(t)
/// ```
///
/// with `u = u0`, `u_t = u1` at `t = 0`. Missing data are zero. With `nrbc`
/// unset the artificial-boundary terms are dropped (homogeneous Neumann).
#[derive(Clone)]
pub struct ModalProblem {
    pub geom: Geometry,
    pub n: usize,
    pub boundary: Option<BoundaryData>,
    pub forcing: Option<Forcing>,
    pub u0: Option<Profile>,
    pub u1: Option<Profile>,
    pub nrbc: bool,
}

impl std::fmt::Debug for ModalProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ModalProblem")
            .field("geom", &self.geom)
            .field("n", &self.n)
            .field("boundary", &self.boundary.is_some())
            .field("forcing", &self.forcing.is_some())
            .field("u0", &self.u0.is_some())
            .field("u1", &self.u1.is_some())
            .field("nrbc", &self.nrbc)
            .finish()
    }
}

impl ModalProblem {
    pub fn new(geom: Geometry, n: usize) -> Self {
        ModalProblem { geom, n, boundary: None, forcing: None, u0: None, u1: None, nrbc: true }
    }

    pub fn beta(&self) -> f64 {
        beta(self.geom.d, self.n)
    }

    fn g(&self, t: f64) -> [f64; 3] {
        self.boundary.as_ref().map_or([0.0; 3], |g| g(t))
    }
}

/// `sum_k amp_k e^{i mu_k t}` (real part) and its first two derivatives.
pub fn exponential_boundary(terms: Vec<(crate::Complex64, f64)>) -> BoundaryData {
    Arc::new(move |t| {
        let mut out = [0.0; 3];
        for &(a, mu) in &terms {
            let e = a * crate::Complex64::new(0.0, mu * t).exp();
            out[0] += e.re;
            out[1] += (e * crate::Complex64::new(0.0, mu)).re;
            out[2] -= (e * mu * mu).re;
        }
        out
    })
}

/// A mode being marched in time.
#[derive(Debug)]
pub struct ModalStepper {
    op: Arc<SpectralOperator>,
    problem: ModalProblem,
    state: NewmarkState,
}

/// Build the Newmark state for `problem`; the kernel is built from `cfg` when
/// the nonreflecting condition is active.
pub fn newmark_init(op: Arc<SpectralOperator>, problem: &ModalProblem, cfg: &BranchCutConfig, dt: f64, params: NewmarkParams) -> Result<ModalStepper> {
    let kernel = if problem.nrbc {
        let g = problem.geom;
        Some(build_kernel(KernelParams::new(g.d, problem.n, g.b, g.c)?, cfg)?)
    } else {
        None
    };
    newmark_init_with_kernel(op, problem, kernel, dt, params)
}

/// As [`newmark_init`] with a prebuilt kernel (ignored when `nrbc` is unset).
pub fn newmark_init_with_kernel(
    op: Arc<SpectralOperator>,
    problem: &ModalProblem,
    kernel: Option<KernelDecomposition>,
    dt: f64,
    params: NewmarkParams,
) -> Result<ModalStepper> {
    let g = op.geom;
    if g != problem.geom {
        return Err(Error::Config("operator and problem geometries differ".into()));
    }
    let ct2 = g.c_tilde() * g.c_tilde();
    let beta = problem.beta();
    let stiffness = (&op.stiffness + &op.inv_square * beta) * ct2;
    let coupling = match (problem.nrbc, kernel) {
        (false, _) => None,
        (true, Some(kernel)) => {
            let p = kernel.params;
            if p.d != g.d || p.n != problem.n || p.b != g.b || p.c != g.c {
                return Err(Error::Config("kernel parameters do not match the problem".into()));
            }
            Some(Coupling { gain: g.c * g.alpha(), kernel })
        }
        (true, None) => return Err(Error::Config("nonreflecting condition requested without a kernel".into())),
    };
    let (damping, boundary_stiffness) = if problem.nrbc { (g.alpha(), g.mu()) } else { (0.0, 0.0) };
    let system = LinearSystem { mass: op.mass.clone(), damping, stiffness, boundary_stiffness, coupling };

    // lifting v = w + g(t) l(x): every l-term moves to the load; l(1) = 0 so the
    // artificial-boundary terms see w only
    let radii: Vec<f64> = op.lgl.nodes.iter().map(|&x| g.radius(x)).collect();
    let load = {
        let op = Arc::clone(&op);
        let problem = problem.clone();
        let lift_k = &op.lift_stiffness * ct2 + &op.lift_inv_square * (ct2 * beta);
        move |t: f64| -> DVector<f64> {
            let mut h = match &problem.forcing {
                Some(f) => op.load(&DVector::from_iterator(radii.len(), radii.iter().map(|&r| f(r, t)))),
                None => DVector::zeros(op.degree),
            };
            let [gv, _, g2] = problem.g(t);
            if gv != 0.0 || g2 != 0.0 {
                h.axpy(-g2, &op.lift_mass, 1.0);
                h.axpy(-gv, &lift_k, 1.0);
            }
            h
        }
    };
    let [g0, g1, _] = problem.g(0.0);
    let initial = |p: &Option<Profile>, gval: f64| -> DVector<f64> {
        let vals: Vec<f64> = op.lgl.nodes.iter().map(|&x| p.as_ref().map_or(0.0, |f| f(g.radius(x))) - gval * lift(x)).collect();
        op.coefficients_from_lgl(&vals)
    };
    let (v0, v1) = (initial(&problem.u0, g0), initial(&problem.u1, g1));
    let state = NewmarkState::new(system, Box::new(load), v0, v1, dt, params)?;
    Ok(ModalStepper { op, problem: problem.clone(), state })
}

impl ModalStepper {
    pub fn advance(&mut self) -> Result<()> {
        self.state.advance()
    }

    pub fn time(&self) -> f64 {
        self.state.time()
    }

    pub fn step_index(&self) -> usize {
        self.state.step_index()
    }

    pub fn state(&self) -> &NewmarkState {
        &self.state
    }

    /// Coefficients of the homogeneous part `w`.
    pub fn coefficients(&self) -> &DVector<f64> {
        &self.state.v
    }

    /// `u(b, t)`.
    pub fn boundary_value(&self) -> f64 {
        2.0 * self.state.boundary_sum()
    }

    /// `u` at the Lobatto points (lift included).
    pub fn lgl_values(&self) -> DVector<f64> {
        let gv = self.problem.g(self.time())[0];
        let mut out = self.op.lgl_values(&self.state.v);
        for (o, &x) in out.iter_mut().zip(&self.op.lgl.nodes) {
            *o += gv * lift(x);
        }
        out
    }

    /// `u` at reference points `x`.
    pub fn values_at(&self, xs: &[f64]) -> Vec<f64> {
        let gv = self.problem.g(self.time())[0];
        xs.iter().map(|&x| self.op.evaluate(&self.state.v, x) + gv * lift(x)).collect()
    }

    /// `|v_t|^2_varpi + c~^2 (|v_x|^2_varpi + beta_n |v/(x+c0)|^2_varpi)` for the full `v = w + g l`.
    pub fn energy(&self) -> f64 {
        let op = &self.op;
        let ct2 = op.geom.c_tilde().powi(2);
        let beta = self.problem.beta();
        let [gv, g1, _] = self.problem.g(self.time());
        let (w, wd) = (&self.state.v, &self.state.vd);
        let quad = |m: &nalgebra::DMatrix<f64>, x: &DVector<f64>| x.dot(&(m * x));
        let kinetic = quad(&op.mass, wd) + 2.0 * g1 * op.lift_mass.dot(wd) + g1 * g1 * op.lift_self[0];
        let grad = quad(&op.stiffness, w) + 2.0 * gv * op.lift_stiffness.dot(w) + gv * gv * op.lift_self[1];
        let pot = quad(&op.inv_square, w) + 2.0 * gv * op.lift_inv_square.dot(w) + gv * gv * op.lift_self[2];
        kinetic + ct2 * (grad + beta * pot)
    }
}

/// Solution values at the Lobatto points at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub values: DVector<f64>,
    pub coeffs: DVector<f64>,
}

/// Output of [`solve_mode`].
#[derive(Debug, Clone)]
pub struct ModalSolution {
    pub dt: f64,
    pub lgl_nodes: Vec<f64>,
    pub radii: Vec<f64>,
    pub snapshots: Vec<Snapshot>,
    /// `u(b, t_m)` for every step.
    pub boundary_trace: Vec<f64>,
    /// Interior energy at every step, when requested.
    pub energy: Vec<f64>,
}

/// Step index for `t` on the grid `m dt`.
pub fn step_of(t: f64, dt: f64) -> Result<usize> {
    let m = (t / dt).round();
    if !(m >= 0.0) || (m * dt - t).abs() > 1e-9 * t.abs().max(dt) {
        return Err(Error::Config(format!("time {t} is not a multiple of dt = {dt}")));
    }
    Ok(m as usize)
}

/// March to `t_end`, recording snapshots at `snapshot_times` (multiples of `dt`).
pub fn solve_mode(
    op: Arc<SpectralOperator>,
    problem: &ModalProblem,
    cfg: &BranchCutConfig,
    dt: f64,
    t_end: f64,
    snapshot_times: &[f64],
    params: NewmarkParams,
    record_energy: bool,
) -> Result<ModalSolution> {
    let steps = step_of(t_end, dt)?;
    let mut marks = snapshot_times.iter().map(|&t| step_of(t, dt).map(|m| (m, t))).collect::<Result<Vec<_>>>()?;
    marks.sort_by_key(|&(m, _)| m);
    if marks.last().is_some_and(|&(m, _)| m > steps) {
        return Err(Error::Config(format!("snapshot after the final time {t_end}")));
    }
    let mut stepper = newmark_init(Arc::clone(&op), problem, cfg, dt, params)?;
    let mut out = ModalSolution {
        dt,
        lgl_nodes: op.lgl.nodes.clone(),
        radii: op.lgl.nodes.iter().map(|&x| op.geom.radius(x)).collect(),
        snapshots: Vec::with_capacity(marks.len()),
        boundary_trace: Vec::with_capacity(steps + 1),
        energy: Vec::new(),
    };
    let mut next = 0;
    for m in 0..=steps {
        if m > 0 {
            stepper.advance()?;
        }
        out.boundary_trace.push(stepper.boundary_value());
        if record_energy {
            out.energy.push(stepper.energy());
        }
        while next < marks.len() && marks[next].0 == m {
            out.snapshots.push(Snapshot { t: marks[next].1, values: stepper.lgl_values(), coeffs: stepper.coefficients().clone() });
            next += 1;
        }
    }
    Ok(out)
}

/// Discrete `L^2` (Lobatto quadrature) and maximum norms of nodal values.
pub fn discrete_norms(weights: &[f64], values: &[f64]) -> (f64, f64) {
    let l2 = weights.iter().zip(values).map(|(w, v)| w * v * v).sum::<f64>().sqrt();
    let max = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    (l2, max)
}

/// Largest `E(t_m)/E(0)` over an energy series (0 for an identically zero series).
pub fn energy_growth(energy: &[f64]) -> f64 {
    match energy.first() {
        Some(&e0) if e0 > 0.0 => energy.iter().fold(0.0f64, |m, &e| m.max(e / e0)),
        _ => 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::galerkin::assemble;

    fn geom(d: u8) -> Geometry {
        Geometry::new(d, 2.0, 4.0, 3.0).unwrap()
    }

    /// `u = g(t) q(x)`, `q = (1 - x)^2/4`: `q(-1) = 1` and `u = u_r = 0` at `r = b`,
    /// so the nonreflecting condition holds exactly and only the forcing remains.
    fn manufactured(d: u8, n: usize) -> ModalProblem {
        let g = geom(d);
        let mut p = ModalProblem::new(g, n);
        let gt = |t: f64| [(t * 2.0).sin().powi(2), 2.0 * (4.0 * t).sin(), 8.0 * (4.0 * t).cos()];
        p.boundary = Some(Arc::new(gt));
        let beta = p.beta();
        p.forcing = Some(Arc::new(move |r, t| {
            let x = g.reference(r);
            let (q, dq, d2q) = ((1.0 - x).powi(2) / 4.0, -(1.0 - x) / 2.0, 0.5);
            let [gv, _, g2] = gt(t);
            let ct2 = g.c_tilde().powi(2);
            let xc = x + g.c0();
            g2 * q - ct2 * gv * ((d as f64 - 1.0) * dq / xc + d2q) + ct2 * beta * gv * q / (xc * xc)
        }));
        p
    }

    #[test]
    fn manufactured_solution_recovered() {
        let cfg = BranchCutConfig::default();
        for d in [2u8, 3] {
            for n in [0usize, 3] {
                let p = manufactured(d, n);
                // the forcing is rational in x, so N must resolve its interpolant
                let op = Arc::new(assemble(p.geom, 20).unwrap());
                let errs: Vec<f64> = [2e-3, 1e-3]
                    .iter()
                    .map(|&dt| {
                        let sol = solve_mode(Arc::clone(&op), &p, &cfg, dt, 1.0, &[1.0], NewmarkParams::default(), false).unwrap();
                        let gv = (2.0f64).sin().powi(2);
                        sol.snapshots[0]
                            .values
                            .iter()
                            .zip(&sol.lgl_nodes)
                            .map(|(v, x)| (v - gv * (1.0 - x).powi(2) / 4.0).abs())
                            .fold(0.0, f64::max)
                    })
                    .collect();
                assert!(errs[1] < 1e-5, "d={d} n={n}: {errs:?}");
                let order = (errs[0] / errs[1]).log2();
                assert!((order - 2.0).abs() < 0.1, "d={d} n={n}: order {order}");
            }
        }
    }

    #[test]
    fn lifting_is_exact_at_scatterer() {
        let cfg = BranchCutConfig::default();
        let p = manufactured(2, 1);
        let op = Arc::new(assemble(p.geom, 10).unwrap());
        let mut st = newmark_init(op, &p, &cfg, 1e-2, NewmarkParams::default()).unwrap();
        for _ in 0..50 {
            st.advance().unwrap();
            let g = (st.time() * 2.0).sin().powi(2);
            assert_eq!(st.lgl_values()[0], g);
            assert_eq!(st.values_at(&[-1.0])[0], g);
        }
    }

    #[test]
    fn zero_data_zero_solution() {
        let cfg = BranchCutConfig::default();
        let p = ModalProblem::new(geom(3), 2);
        let op = Arc::new(assemble(p.geom, 8).unwrap());
        let sol = solve_mode(op, &p, &cfg, 1e-2, 1.0, &[0.0, 1.0], NewmarkParams::default(), true).unwrap();
        assert!(sol.boundary_trace.iter().all(|&v| v == 0.0));
        assert!(sol.energy.iter().all(|&e| e == 0.0));
        assert_eq!(energy_growth(&sol.energy), 0.0);
        assert!(sol.snapshots.iter().all(|s| s.values.amax() == 0.0));
    }

    #[test]
    fn snapshot_times_must_be_on_grid() {
        let cfg = BranchCutConfig::default();
        let p = ModalProblem::new(geom(2), 0);
        let op = Arc::new(assemble(p.geom, 6).unwrap());
        assert!(solve_mode(Arc::clone(&op), &p, &cfg, 0.3, 0.9, &[0.5], NewmarkParams::default(), false).is_err());
        assert!(solve_mode(op, &p, &cfg, 0.3, 0.9, &[1.2], NewmarkParams::default(), false).is_err());
        assert!(step_of(0.9, 0.3).unwrap() == 3);
    }

    #[test]
    fn energy_of_free_pulse_does_not_grow() {
        let cfg = BranchCutConfig::default();
        let g = geom(2);
        let mut p = ModalProblem::new(g, 1);
        p.u0 = Some(Arc::new(move |r| {
            let x = g.reference(r);
            (1.0 - x * x).powi(3) * (-4.0 * x * x).exp()
        }));
        let op = Arc::new(assemble(g, 24).unwrap());
        let sol = solve_mode(op, &p, &cfg, 2e-3, 4.0, &[], NewmarkParams::default(), true).unwrap();
        assert!(energy_growth(&sol.energy) <= 1.0 + 1e-6, "{}", energy_growth(&sol.energy));
        // the pulse leaves through the artificial boundary
        assert!(sol.energy.last().unwrap() < &(1e-2 * sol.energy[0]));
    }
}
