//! The wave-maker benchmark: every mode `|n| <= M` of the annulus problem with
//! Gaussian data on `r = b0`, solved numerically and compared with the exact
//! modal solution at the Lobatto points.
//!
//! The modal data are `g_n sin^p(omega t)`, so each `|n|` is solved once with
//! unit amplitude and scaled by `|g_n|` (`|g_{-n}| = |g_n|` for real data).

use super::galerkin::{assemble, Geometry};
use super::modal::{discrete_norms, exponential_boundary, solve_mode, ModalProblem, ModalSolution};
use super::newmark::NewmarkParams;
use crate::error::Result;
use crate::exec::Execution;
use crate::kernel::BranchCutConfig;
use crate::oracle::{modal_coefficients, DirichletData, ExactModalSolution, ModalBoundaryCoefficient};
use crate::Complex64;
use std::sync::Arc;

/// Parameters of one benchmark run.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveMakerRun {
    pub data: DirichletData,
    pub m: usize,
    pub b: f64,
    pub c: f64,
    pub degree: usize,
    pub dt: f64,
    pub times: Vec<f64>,
    pub params: NewmarkParams,
    pub fft_grid: usize,
}

impl WaveMakerRun {
    /// Defaults of the temporal-convergence study: `M = 15`, `b = 5`, `omega = pi`, `p = 6`, `N = 50`.
    pub fn standard(dt: f64, degree: usize, times: Vec<f64>) -> Self {
        WaveMakerRun {
            data: DirichletData::standard(std::f64::consts::PI, 6),
            m: 15,
            b: 5.0,
            c: 5.0,
            degree,
            dt,
            times,
            params: NewmarkParams::default(),
            fft_grid: 256,
        }
    }

    pub fn geometry(&self) -> Result<Geometry> {
        Geometry::new(2, self.data.b0, self.b, self.c)
    }
}

/// Numerical and exact unit-amplitude solutions of mode `|n|`.
#[derive(Debug, Clone)]
pub struct ModeResult {
    pub n: usize,
    pub numerical: ModalSolution,
    /// Exact values at the Lobatto radii, one vector per snapshot.
    pub exact: Vec<Vec<f64>>,
}

/// Errors at one time: the maximum over modes of the scaled discrete `L^2` and
/// maximum norms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorRow {
    pub t: f64,
    pub l2: f64,
    pub max: f64,
}

/// Solve every `|n| <= M` with unit data.
pub fn solve_modes(run: &WaveMakerRun, cfg: &BranchCutConfig, exec: Execution) -> Result<(Vec<ModalBoundaryCoefficient>, Vec<ModeResult>)> {
    let geom = run.geometry()?;
    let coeffs = modal_coefficients(&run.data, run.m, run.fft_grid.max((4 * run.m).next_power_of_two()))?;
    let op = Arc::new(assemble(geom, run.degree)?);
    let t_end = run.times.iter().copied().fold(0.0, f64::max);
    let temporal = run.data.temporal();
    let modes: Vec<usize> = (0..=run.m).collect();
    let results = exec.try_map(&modes, |&n| -> Result<ModeResult> {
        let mut problem = ModalProblem::new(geom, n);
        problem.boundary = Some(exponential_boundary(temporal.clone()));
        let numerical = solve_mode(Arc::clone(&op), &problem, cfg, run.dt, t_end, &run.times, run.params, false)?;
        let exact_sol = ExactModalSolution::new(n, run.data.b0, run.c, cfg)?;
        let unit = ModalBoundaryCoefficient { n: n as i64, spatial: Complex64::new(1.0, 0.0), temporal: temporal.clone() };
        let terms = numerical.radii.iter().map(|&r| exact_sol.at_radius(r)).collect::<Result<Vec<_>>>()?;
        let exact = numerical
            .snapshots
            .iter()
            .map(|s| terms.iter().map(|rt| rt.eval(&unit, run.c, s.t).value.re).collect())
            .collect();
        Ok(ModeResult { n, numerical, exact })
    })?;
    Ok((coeffs, results))
}

/// `max_n |g_n| ||u_n^N - u_n||` in the discrete `L^2` and maximum norms at each requested time.
pub fn wave_maker_errors(run: &WaveMakerRun, cfg: &BranchCutConfig, exec: Execution) -> Result<Vec<ErrorRow>> {
    let (coeffs, results) = solve_modes(run, cfg, exec)?;
    let weights = crate::quadrature::gauss_lobatto(run.degree).weights;
    let mut rows: Vec<ErrorRow> = Vec::new();
    for res in &results {
        let amp = coeffs[run.m + res.n].spatial.norm().max(coeffs[run.m - res.n].spatial.norm());
        for (k, snap) in res.numerical.snapshots.iter().enumerate() {
            let diff: Vec<f64> = snap.values.iter().zip(&res.exact[k]).map(|(a, b)| a - b).collect();
            let (l2, max) = discrete_norms(&weights, &diff);
            match rows.iter_mut().find(|r| r.t == snap.t) {
                Some(r) => {
                    r.l2 = r.l2.max(amp * l2);
                    r.max = r.max.max(amp * max);
                }
                None => rows.push(ErrorRow { t: snap.t, l2: amp * l2, max: amp * max }),
            }
        }
    }
    rows.sort_by(|a, b| a.t.total_cmp(&b.t));
    Ok(rows)
}
