//! The reproduction experiments. Each one resolves and validates its whole
//! configuration before doing any numerical work.

use crate::config::{parse_number, ConfigError, Experiment, RunConfig};
use crate::report::{num, opt, Gate, Outcome, Table};
use nrbc_core::convolution::{direct_convolution, KernelConvolver};
use nrbc_core::kernel::{build_kernel, build_kernels, eval_w, eval_w_asymptotic, BranchCutConfig, KernelParams};
use nrbc_core::oracle::{DirichletData, ExactModalSolution, ModalBoundaryCoefficient, ResidualSetup};
use nrbc_core::solver::{solve_modes, wave_maker_errors, ErrorRow, NewmarkParams, WaveMakerRun};
use nrbc_core::specfun::{zero_sets, BesselOrder};
use nrbc_core::{golden, Complex64, Execution};
use std::error::Error;
use std::time::Instant;

pub type RunResult = Result<Outcome, Box<dyn Error + Send + Sync>>;

pub fn run(cfg: &RunConfig, gate_scale: f64, exec: Execution) -> RunResult {
    match cfg.experiment {
        Experiment::Table1 => table1(cfg, gate_scale, exec),
        Experiment::Zeros => zeros(cfg, gate_scale, exec),
        Experiment::WnProfile => wn_profile(cfg, exec),
        Experiment::NrbcAccuracy => nrbc_accuracy(cfg, gate_scale, exec),
        Experiment::TimeConvergence => time_convergence(cfg, gate_scale, exec),
        Experiment::SpaceConvergence => space_convergence(cfg, gate_scale, exec),
        Experiment::Simulate => simulate(cfg, gate_scale, exec),
        Experiment::ConvBench => conv_bench(cfg, gate_scale),
    }
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, Box<dyn Error + Send + Sync>> {
    Err(Box::new(ConfigError(msg.into())))
}

fn branch_config(cfg: &RunConfig) -> Result<BranchCutConfig, ConfigError> {
    let bc = BranchCutConfig {
        nodes_per_panel: cfg.usize("nodes_per_panel")?,
        exponent_step: cfg.f64("exponent_step")?,
        exponent_growth: cfg.f64("exponent_growth")?,
        left_cutoff: cfg.f64("left_cutoff")?,
        tail: cfg.f64("tail")?,
        small_n_upper: cfg.f64("small_n_upper")?,
        grading_ratio: cfg.f64("grading_ratio")?,
        floor_n0: cfg.f64("floor_n0")?,
    };
    let positive = [bc.exponent_step, bc.left_cutoff, bc.tail, bc.small_n_upper, bc.floor_n0];
    if bc.nodes_per_panel < 2 || positive.iter().any(|v| !(*v > 0.0)) || !(bc.exponent_growth >= 0.0) || !(bc.grading_ratio > 0.0 && bc.grading_ratio < 1.0) {
        return Err(ConfigError("branch-cut quadrature settings out of range".into()));
    }
    Ok(bc)
}

fn dimension(cfg: &RunConfig) -> Result<u8, ConfigError> {
    match cfg.usize("d")? {
        2 => Ok(2),
        3 => Ok(3),
        d => Err(ConfigError(format!("`d` must be 2 or 3, got {d}"))),
    }
}

fn data(cfg: &RunConfig, omega: f64) -> Result<DirichletData, Box<dyn Error + Send + Sync>> {
    let p = cfg.usize("p")?;
    let d = DirichletData {
        a1: cfg.f64("a1")?,
        iota: cfg.f64("iota")?,
        xs: cfg.f64("xs")?,
        ys: cfg.f64("ys")?,
        b0: cfg.f64("b0")?,
        omega,
        p: u32::try_from(p).map_err(|_| ConfigError(format!("`p` too large: {p}")))?,
    };
    d.validate()?;
    if !(d.iota > 0.0) {
        return invalid("`iota` must be positive");
    }
    Ok(d)
}

fn fft_grid(cfg: &RunConfig, m: usize) -> Result<usize, ConfigError> {
    let g = cfg.usize("fft_grid")?;
    if !g.is_power_of_two() || g < 4 * m {
        return Err(ConfigError(format!("`fft_grid` must be a power of two >= 4 m = {}, got {g}", 4 * m)));
    }
    Ok(g)
}

fn wave_maker(cfg: &RunConfig, dt: f64, degree: usize, times: Vec<f64>) -> Result<WaveMakerRun, Box<dyn Error + Send + Sync>> {
    let m = cfg.usize("m")?;
    let run = WaveMakerRun {
        data: data(cfg, cfg.f64("omega")?)?,
        m,
        b: cfg.f64("b")?,
        c: cfg.f64("c")?,
        degree,
        dt,
        times,
        params: NewmarkParams { theta: cfg.f64("theta")?, vartheta: cfg.f64("vartheta")?, allow_unstable: cfg.flag("allow_unstable")? },
        fft_grid: fft_grid(cfg, m)?,
    };
    run.geometry()?;
    run.params.check()?;
    if degree < 4 {
        return invalid(format!("polynomial degree must be at least 4, got {degree}"));
    }
    if !(dt > 0.0) {
        return invalid("`dt` must be positive");
    }
    for &t in &run.times {
        nrbc_core::solver::step_of(t, dt)?;
    }
    Ok(run)
}

fn table1(cfg: &RunConfig, scale: f64, exec: Execution) -> RunResult {
    let (d, b, c) = (dimension(cfg)?, cfg.f64("b")?, cfg.f64("c")?);
    let modes = cfg.usize_list("modes")?;
    let times = cfg.f64_list("times")?;
    let gate = cfg.f64("gate")?;
    let bc = branch_config(cfg)?;
    let params = modes.iter().map(|&n| KernelParams::new(d, n, b, c)).collect::<Result<Vec<_>, _>>()?;

    let kernels = build_kernels(&params, &bc, exec)?;
    let published = if (d, b, c) == (2, 3.0, 5.0) { golden::kernel_samples() } else { Vec::new() };
    let mut table = Table::new("table1.csv", &["n", "t", "sigma", "published", "rel_err"]);
    let mut worst: Option<f64> = None;
    for k in &kernels {
        for &t in &times {
            let v = k.sigma(t);
            let reference = published.iter().find(|s| s.0 == k.params.n && s.1 == t).map(|s| s.2);
            let rel = reference.map(|p| ((v - p) / p).abs());
            if let Some(r) = rel {
                worst = Some(worst.map_or(r, |w: f64| w.max(r)));
            }
            table.push(vec![k.params.n.to_string(), num(t), num(v), opt(reference), opt(rel)]);
        }
    }
    let mut out = Outcome { tables: vec![table], ..Default::default() };
    if let Some(w) = worst {
        out.gates.push(Gate::new("max relative error against published samples", w, gate, scale));
    }
    Ok(out)
}

fn zeros(cfg: &RunConfig, scale: f64, exec: Execution) -> RunResult {
    let dims = cfg.usize_list("dimensions")?;
    let modes = cfg.usize_list("modes")?;
    let tol = cfg.f64("tol")?;
    if !(tol > 0.0) {
        return invalid("`tol` must be positive");
    }
    let mut orders = Vec::new();
    for &d in &dims {
        let d = u8::try_from(d).ok().filter(|d| *d == 2 || *d == 3).ok_or_else(|| ConfigError(format!("dimension must be 2 or 3, got {d}")))?;
        orders.extend(modes.iter().map(|&n| BesselOrder::for_dimension(d, n)));
    }

    let sets = zero_sets(&orders, tol, exec)?;
    let mut table = Table::new("zeros.csv", &["order_kind", "n", "j", "re", "im", "residual"]);
    let mut worst: f64 = 0.0;
    for s in &sets {
        for (j, (z, r)) in s.zeros.iter().zip(&s.residuals).enumerate() {
            worst = worst.max(*r);
            table.push(vec![s.order.kind_label().into(), s.order.n.to_string(), j.to_string(), num(z.re), num(z.im), num(*r)]);
        }
    }
    let gate = Gate::new("max |K(z)|/|K'(z)| over all zeros", worst, tol, scale);
    Ok(Outcome { tables: vec![table], gates: vec![gate], notes: vec![("zero_count".into(), zero_total(&sets))] })
}

fn zero_total(sets: &[nrbc_core::specfun::ZeroSet]) -> f64 {
    sets.iter().map(|s| s.zeros.len()).sum::<usize>() as f64
}

fn wn_profile(cfg: &RunConfig, exec: Execution) -> RunResult {
    let modes = cfg.usize_list("modes")?;
    let (r_min, r_max, points) = (cfg.f64("r_min")?, cfg.f64("r_max")?, cfg.usize("points")?);
    if !(r_min > 0.0 && r_max > r_min) || points < 2 {
        return invalid("need 0 < r_min < r_max and at least 2 points");
    }
    let dump = cfg.flag("dump_kernels")?;
    let (d, b, c) = (dimension(cfg)?, cfg.f64("b")?, cfg.f64("c")?);
    let bc = branch_config(cfg)?;
    let params = modes.iter().map(|&n| KernelParams::new(d, n, b, c)).collect::<Result<Vec<_>, _>>()?;

    let ratio = (r_max / r_min).powf(1.0 / (points - 1) as f64);
    let mut table = Table::new("wn_profile.csv", &["n", "r", "w", "w_asymptotic"]);
    let rows = exec.try_map(&modes, |&n| -> nrbc_core::Result<Vec<Vec<String>>> {
        (0..points)
            .map(|i| {
                let r = if i + 1 == points { r_max } else { r_min * ratio.powi(i as i32) };
                let asym = if n > 0 { Some(eval_w_asymptotic(n, r / n as f64)?) } else { None };
                Ok(vec![n.to_string(), num(r), num(eval_w(n, r)?), opt(asym)])
            })
            .collect()
    })?;
    table.rows = rows.into_iter().flatten().collect();
    let mut out = Outcome { tables: vec![table], ..Default::default() };
    if dump {
        for k in build_kernels(&params, &bc, exec)? {
            let mut buf = Vec::new();
            k.write_csv(&mut buf)?;
            let text = String::from_utf8(buf)?;
            let mut lines = text.lines();
            lines.next();
            let mut t = Table::new(format!("kernel_d{}_n{}.csv", k.params.d, k.params.n), &KERNEL_HEADER);
            t.rows = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
            out.tables.push(t);
        }
    }
    Ok(out)
}

const KERNEL_HEADER: [&str; 10] = ["kind", "index", "re", "im", "rate_re", "rate_im", "coeff_re", "coeff_im", "weight", "w_n"];

fn nrbc_accuracy(cfg: &RunConfig, scale: f64, exec: Execution) -> RunResult {
    let omegas = cfg.f64_list("omegas")?;
    let bs = cfg.f64_list("bs")?;
    if omegas.len() != bs.len() {
        return invalid(format!("`omegas` and `bs` must pair up, got {} and {}", omegas.len(), bs.len()));
    }
    let times = cfg.f64_list("times")?;
    let (m, c, gate) = (cfg.usize("m")?, cfg.f64("c")?, cfg.f64("gate")?);
    let grid = fft_grid(cfg, m)?;
    let bc = branch_config(cfg)?;
    let cases = omegas.iter().zip(&bs).map(|(&w, &b)| data(cfg, w).map(|d| (d, b))).collect::<Result<Vec<_>, _>>()?;
    for (d, b) in &cases {
        KernelParams::new(2, 0, *b, c)?;
        if !(*b > d.b0) {
            return invalid(format!("b = {b} must exceed b0 = {}", d.b0));
        }
    }

    let published = golden::table("table2");
    let mut table = Table::new("nrbc_accuracy.csv", &["t", "b", "omega", "E1", "E2", "published_E1", "published_E2"]);
    let mut worst: f64 = 0.0;
    for (d, b) in &cases {
        let setup = ResidualSetup::new(d, m, grid, *b, c, &bc, exec)?;
        for &t in &times {
            let (e1, e2) = setup.metrics(t, exec);
            worst = worst.max(e2);
            let reference = published.iter().find(|r| {
                let w = r.text("omega").and_then(|s| parse_number(s).ok());
                r.get("t").ok() == Some(t) && r.get("b").ok() == Some(*b) && w.is_some_and(|w| (w - d.omega).abs() < 1e-12)
            });
            let pe = |k: &str| reference.and_then(|r| r.get(k).ok());
            table.push(vec![num(t), num(*b), num(d.omega), num(e1), num(e2), opt(pe("E1")), opt(pe("E2"))]);
        }
    }
    let gate = Gate::new("max E2 over the (t, omega, b) grid", worst, gate, scale);
    Ok(Outcome { tables: vec![table], gates: vec![gate], ..Default::default() })
}

fn published_row(table: &str, key: &str, value: f64, t: f64) -> Option<golden::Record> {
    golden::table(table).into_iter().find(|r| r.get("t").ok() == Some(t) && r.get(key).ok() == Some(value))
}

fn time_convergence(cfg: &RunConfig, scale: f64, exec: Execution) -> RunResult {
    let dts = cfg.f64_list("dts")?;
    let times = cfg.f64_list("times")?;
    let degree = cfg.usize("degree")?;
    let (order, tol) = (cfg.f64("order")?, cfg.f64("order_tol")?);
    let bc = branch_config(cfg)?;
    let runs = dts.iter().map(|&dt| wave_maker(cfg, dt, degree, times.clone())).collect::<Result<Vec<_>, _>>()?;

    let errors = runs.iter().map(|r| wave_maker_errors(r, &bc, exec)).collect::<Result<Vec<Vec<ErrorRow>>, _>>()?;
    let mut table = Table::new("time_convergence.csv", &["t", "dt", "l2", "max", "order_l2", "order_max", "published_l2", "published_max"]);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (i, &t) in times.iter().enumerate() {
        for (k, &dt) in dts.iter().enumerate() {
            let e = errors[k][i];
            let orders = (k > 0).then(|| {
                let rate = (dts[k - 1] / dt).ln();
                ((errors[k - 1][i].l2 / e.l2).ln() / rate, (errors[k - 1][i].max / e.max).ln() / rate)
            });
            if let Some((a, b)) = orders {
                lo = lo.min(a.min(b));
                hi = hi.max(a.max(b));
            }
            let reference = published_row("table3", "dt", dt, t);
            let pe = |k: &str| reference.as_ref().and_then(|r| r.get(k).ok());
            table.push(vec![num(t), num(dt), num(e.l2), num(e.max), opt(orders.map(|o| o.0)), opt(orders.map(|o| o.1)), opt(pe("l2")), opt(pe("max"))]);
        }
    }
    let mut out = Outcome { tables: vec![table], ..Default::default() };
    if dts.len() > 1 {
        out.gates.push(Gate::new("distance of observed orders from the nominal order", (lo - order).abs().max((hi - order).abs()), tol, scale));
        out.notes.push(("min_order".into(), lo));
        out.notes.push(("max_order".into(), hi));
    }
    Ok(out)
}

fn space_convergence(cfg: &RunConfig, scale: f64, exec: Execution) -> RunResult {
    let dt = cfg.f64("dt")?;
    let degrees = cfg.usize_list("degrees")?;
    let times = cfg.f64_list("times")?;
    let (floor, gate) = (cfg.f64("floor")?, cfg.f64("gate")?);
    let bc = branch_config(cfg)?;
    let runs = degrees.iter().map(|&n| wave_maker(cfg, dt, n, times.clone())).collect::<Result<Vec<_>, _>>()?;

    let errors = runs.iter().map(|r| wave_maker_errors(r, &bc, exec)).collect::<Result<Vec<Vec<ErrorRow>>, _>>()?;
    let mut table = Table::new("space_convergence.csv", &["t", "N", "l2", "max", "published_l2", "published_max"]);
    let mut increases = 0usize;
    let mut finest: f64 = 0.0;
    for (i, &t) in times.iter().enumerate() {
        for (k, &n) in degrees.iter().enumerate() {
            let e = errors[k][i];
            // decay must be monotone until the time-discretisation floor is reached
            if k > 0 && errors[k - 1][i].l2 > floor && e.l2 > errors[k - 1][i].l2 {
                increases += 1;
            }
            let reference = published_row("table4", "N", n as f64, t);
            let pe = |k: &str| reference.as_ref().and_then(|r| r.get(k).ok());
            table.push(vec![num(t), n.to_string(), num(e.l2), num(e.max), opt(pe("l2")), opt(pe("max"))]);
        }
        finest = finest.max(errors[degrees.len() - 1][i].l2);
    }
    let mut out = Outcome { tables: vec![table], ..Default::default() };
    out.gates.push(Gate::new("error increases above the floor", increases as f64, 0.0, 1.0));
    out.gates.push(Gate::new("largest L2 error at the finest degree", finest, gate, scale));
    if degrees.len() >= 3 {
        let worst_drop = (0..times.len()).map(|i| errors[0][i].l2 / errors[2][i].l2).fold(f64::INFINITY, f64::min);
        out.notes.push((format!("min_drop_N{}_to_N{}", degrees[0], degrees[2]), worst_drop));
    }
    Ok(out)
}

fn simulate(cfg: &RunConfig, scale: f64, exec: Execution) -> RunResult {
    let (dt, degree) = (cfg.f64("dt")?, cfg.usize("degree")?);
    let times = cfg.f64_list("times")?;
    let (phi_points, stride, gate) = (cfg.usize("phi_points")?, cfg.usize("trace_stride")?, cfg.f64("gate")?);
    if phi_points == 0 || stride == 0 {
        return invalid("`phi_points` and `trace_stride` must be positive");
    }
    let bc = branch_config(cfg)?;
    let run = wave_maker(cfg, dt, degree, times.clone())?;

    let (coeffs, modes) = solve_modes(&run, &bc, exec)?;
    let phis: Vec<f64> = (0..phi_points).map(|k| 2.0 * std::f64::consts::PI * k as f64 / phi_points as f64).collect();
    // U(r, phi) = sum_n g_n e^{i n phi} u_{|n|}(r): real because g_{-n} = conj(g_n)
    let synth = |phi: f64, unit: &dyn Fn(usize) -> f64| -> f64 {
        coeffs.iter().map(|g| (g.spatial * Complex64::from_polar(1.0, g.n as f64 * phi)).re * unit(g.n.unsigned_abs() as usize)).sum()
    };

    let radii = &modes[0].numerical.radii;
    let mut field = Table::new("field.csv", &["t", "r", "phi", "U_exact", "U_num"]);
    let mut worst: f64 = 0.0;
    for (k, &t) in times.iter().enumerate() {
        for (i, &r) in radii.iter().enumerate() {
            for &phi in &phis {
                let ex = synth(phi, &|n| modes[n].exact[k][i]);
                let nu = synth(phi, &|n| modes[n].numerical.snapshots[k].values[i]);
                worst = worst.max((ex - nu).abs());
                field.push(vec![num(t), num(r), num(phi), num(ex), num(nu)]);
            }
        }
    }

    let mut per_mode = Table::new("modes.csv", &["n", "t", "r", "value", "exact"]);
    for res in &modes {
        for (k, snap) in res.numerical.snapshots.iter().enumerate() {
            for (i, &r) in res.numerical.radii.iter().enumerate() {
                per_mode.push(vec![res.n.to_string(), num(snap.t), num(r), num(snap.values[i]), num(res.exact[k][i])]);
            }
        }
    }

    // boundary trace at (r = b, phi = 0)
    let terms = (0..=run.m)
        .map(|n| ExactModalSolution::new(n, run.data.b0, run.c, &bc).and_then(|s| s.at_radius(run.b)))
        .collect::<nrbc_core::Result<Vec<_>>>()?;
    let unit = |n: usize| ModalBoundaryCoefficient { n: n as i64, spatial: Complex64::new(1.0, 0.0), temporal: run.data.temporal() };
    let mut trace = Table::new("boundary_trace.csv", &["t", "U_exact", "U_num"]);
    let steps = modes[0].numerical.boundary_trace.len();
    for s in (0..steps).step_by(stride) {
        let t = s as f64 * dt;
        let ex = synth(0.0, &|n| terms[n].eval(&unit(n), run.c, t).value.re);
        let nu = synth(0.0, &|n| modes[n].numerical.boundary_trace[s]);
        trace.push(vec![num(t), num(ex), num(nu)]);
    }
    let gate = Gate::new("max |U_num - U_exact| over snapshot grids", worst, gate, scale);
    Ok(Outcome { tables: vec![field, per_mode, trace], gates: vec![gate], ..Default::default() })
}

fn conv_bench(cfg: &RunConfig, scale: f64) -> RunResult {
    let p = KernelParams::new(dimension(cfg)?, cfg.usize("n")?, cfg.f64("b")?, cfg.f64("c")?)?;
    let dt = cfg.f64("dt")?;
    let steps = cfg.usize_list("steps")?;
    let (direct_max, repeats) = (cfg.usize("direct_max_steps")?, cfg.usize("repeats")?.max(1));
    let (gate, slope_tol) = (cfg.f64("gate")?, cfg.f64("slope_tol")?);
    if !(dt > 0.0) || steps.contains(&0) {
        return invalid("need dt > 0 and positive step counts");
    }
    let kernel = build_kernel(p, &branch_config(cfg)?)?;

    let signal = |t: f64| (1.3 * t).sin() * (-0.2 * t).exp() + 0.5 * (3.1 * t).cos() - 0.5;
    let mut table = Table::new("conv_bench.csv", &["method", "steps", "total_s", "per_step_s", "max_dev"]);
    let mut rec_times = Vec::new();
    let mut direct_times = Vec::new();
    let mut worst: Option<f64> = None;
    for &nt in &steps {
        let g: Vec<f64> = (0..=nt).map(|k| signal(k as f64 * dt)).collect();
        let mut samples = Vec::with_capacity(repeats);
        let mut rec = Vec::new();
        for _ in 0..repeats {
            let mut conv = KernelConvolver::new(&kernel, dt)?;
            rec = Vec::with_capacity(nt + 1);
            rec.push(0.0);
            let start = Instant::now();
            for k in 0..nt {
                rec.push(conv.convolve_step(g[k], g[k + 1], dt)?);
            }
            samples.push(start.elapsed().as_secs_f64());
        }
        samples.sort_by(f64::total_cmp);
        let median = samples[samples.len() / 2];
        rec_times.push((nt as f64, median));
        let mut dev = None;
        if nt <= direct_max {
            let start = Instant::now();
            let direct = direct_convolution(|s| kernel.sigma(s), &g, dt, 4);
            let secs = start.elapsed().as_secs_f64();
            direct_times.push((nt as f64, secs));
            let d = rec.iter().zip(&direct).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            worst = Some(worst.map_or(d, |w: f64| w.max(d)));
            dev = Some(d);
            table.push(vec!["direct".into(), nt.to_string(), num(secs), num(secs / nt as f64), num(d)]);
        }
        table.push(vec!["recursive".into(), nt.to_string(), num(median), num(median / nt as f64), opt(dev)]);
    }
    let mut out = Outcome { tables: vec![table], ..Default::default() };
    if let Some(w) = worst {
        out.gates.push(Gate::new("max |recursive - direct|", w, gate, scale));
    }
    if rec_times.len() >= 2 {
        let s = log_slope(&rec_times);
        out.gates.push(Gate::new("|recursive log-log slope - 1|", (s - 1.0).abs(), slope_tol, scale));
        out.notes.push(("recursive_slope".into(), s));
    }
    if direct_times.len() >= 2 {
        out.notes.push(("direct_slope".into(), log_slope(&direct_times)));
    }
    Ok(out)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (mx, my) = points.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x.ln() / n, b + y.ln() / n));
    let (sxy, sxx) = points.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + (x.ln() - mx) * (y.ln() - my), b + (x.ln() - mx).powi(2)));
    sxy / sxx
}
