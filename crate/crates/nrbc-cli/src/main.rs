//! `nrbc`: runs the reproduction experiments and writes CSV tables plus a
//! `manifest.json` into the output directory.
//!
//! Exit status: 0 when every gate passes, 1 when a gate fails, 2 on a
//! configuration or numerical error.

mod config;
mod experiments;
mod report;

use clap::{Args, Parser, Subcommand};
use config::{Experiment, RunConfig};
use nrbc_core::Execution;
use report::{write_manifest, Manifest};
use std::path::PathBuf;
use std::process::ExitCode;

/// Exact nonreflecting boundary kernels: reproduction harness.
#[derive(Debug, Parser)]
#[command(name = "nrbc", version)]
struct Cli {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long, global = true, value_name = "DIR", default_value = "nrbc-out")]
    out: PathBuf,
    /// Worker threads; `NRBC_THREADS` caps this value. 1 runs sequentially.
    #[arg(long, global = true, value_name = "K")]
    threads: Option<usize>,
    /// Multiply every gate tolerance by X.
    #[arg(long = "gate-scale", global = true, value_name = "X", default_value_t = 1.0)]
    gate_scale: f64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Kernel samples sigma_n(t) against the published table.
    Table1(Overrides),
    /// Zeros of K_n and K_{n+1/2} as CSV.
    Zeros(Overrides),
    /// W_n(r) with its uniform asymptotic approximation; kernel decompositions.
    WnProfile(Overrides),
    /// Boundary residuals of the exact wave-maker solution.
    NrbcAccuracy(Overrides),
    /// Temporal convergence of the Newmark scheme.
    TimeConvergence(Overrides),
    /// Spectral convergence in the polynomial degree.
    SpaceConvergence(Overrides),
    /// Exact and numerical fields on the annulus.
    Simulate(Overrides),
    /// Recursive against direct convolution timing.
    ConvBench(Overrides),
}

#[derive(Debug, Args)]
struct Overrides {
    /// Configuration overrides `--key value` (see the experiment's keys in the README).
    #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "--KEY VALUE")]
    set: Vec<String>,
}

impl Command {
    fn split(self) -> (Experiment, Vec<String>) {
        match self {
            Command::Table1(o) => (Experiment::Table1, o.set),
            Command::Zeros(o) => (Experiment::Zeros, o.set),
            Command::WnProfile(o) => (Experiment::WnProfile, o.set),
            Command::NrbcAccuracy(o) => (Experiment::NrbcAccuracy, o.set),
            Command::TimeConvergence(o) => (Experiment::TimeConvergence, o.set),
            Command::SpaceConvergence(o) => (Experiment::SpaceConvergence, o.set),
            Command::Simulate(o) => (Experiment::Simulate, o.set),
            Command::ConvBench(o) => (Experiment::ConvBench, o.set),
        }
    }
}

/// Global flags given after a key override land in the override list; pull them back out.
fn take_globals(cli: &mut Cli, rest: Vec<String>) -> Result<Vec<String>, String> {
    let mut keep = Vec::new();
    let mut it = rest.into_iter();
    while let Some(a) = it.next() {
        let (flag, inline) = match a.split_once('=') {
            Some((f, v)) => (f.to_string(), Some(v.to_string())),
            None => (a.clone(), None),
        };
        if !matches!(flag.as_str(), "--config" | "--out" | "--threads" | "--gate-scale") {
            keep.push(a);
            continue;
        }
        let value = inline.or_else(|| it.next()).ok_or_else(|| format!("{flag} needs a value"))?;
        match flag.as_str() {
            "--config" => cli.config = Some(value.into()),
            "--out" => cli.out = value.into(),
            "--threads" => cli.threads = Some(value.parse().map_err(|_| format!("--threads: `{value}` is not a count"))?),
            _ => cli.gate_scale = value.parse().map_err(|_| format!("--gate-scale: `{value}` is not a number"))?,
        }
    }
    Ok(keep)
}

fn thread_count(flag: Option<usize>) -> Result<Option<usize>, String> {
    let cap = match std::env::var("NRBC_THREADS") {
        Ok(v) => Some(v.trim().parse::<usize>().map_err(|_| format!("NRBC_THREADS: `{v}` is not a count"))?),
        Err(_) => None,
    };
    let k = match (flag, cap) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    };
    if k == Some(0) {
        return Err("thread count must be positive".into());
    }
    Ok(k)
}

fn fail(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let mut cli = Cli::parse();
    let command = std::mem::replace(&mut cli.command, Command::Table1(Overrides { set: Vec::new() }));
    let (experiment, rest) = command.split();
    let rest = match take_globals(&mut cli, rest) {
        Ok(r) => r,
        Err(e) => return fail(e),
    };
    if !(cli.gate_scale.is_finite() && cli.gate_scale > 0.0) {
        return fail("--gate-scale must be positive");
    }

    let mut cfg = RunConfig::new(experiment);
    if let Some(path) = &cli.config {
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => return fail(format!("{}: {e}", path.display())),
        };
        if let Err(e) = cfg.apply_file(&text) {
            return fail(format!("{}: {e}", path.display()));
        }
    }
    if let Err(e) = cfg.apply_flags(&rest) {
        return fail(e);
    }

    let threads = match thread_count(cli.threads) {
        Ok(k) => k,
        Err(e) => return fail(e),
    };
    let exec = match threads {
        Some(1) => Execution::Sequential,
        _ => Execution::default(),
    };
    if let Some(k) = threads {
        if let Err(e) = nrbc_core::exec::init_threads(k) {
            return fail(format!("thread pool: {e}"));
        }
    }
    if let Err(e) = std::fs::create_dir_all(&cli.out) {
        return fail(format!("{}: {e}", cli.out.display()));
    }

    let outcome = match experiments::run(&cfg, cli.gate_scale, exec) {
        Ok(o) => o,
        Err(e) => return fail(e),
    };
    let mut outputs = Vec::new();
    for t in &outcome.tables {
        match t.write(&cli.out) {
            Ok(_) => outputs.push(t.name.clone()),
            Err(e) => return fail(format!("writing {}: {e}", t.name)),
        }
    }
    let pass = outcome.pass();
    let manifest = Manifest {
        experiment: experiment.name(),
        nrbc_version: env!("CARGO_PKG_VERSION"),
        config: cfg.entries(),
        threads: if exec == Execution::Sequential { 1 } else { nrbc_core::exec::current_threads() },
        parallel: exec == Execution::Parallel,
        gate_scale: cli.gate_scale,
        outputs,
        gates: &outcome.gates,
        notes: outcome.notes.iter().map(|(k, v)| (k.as_str(), *v)).collect(),
        pass,
    };
    if let Err(e) = write_manifest(&cli.out, &manifest) {
        return fail(format!("writing manifest: {e}"));
    }

    for g in &outcome.gates {
        println!("{} {}: {:.3e} <= {:.3e}", if g.pass { "PASS" } else { "FAIL" }, g.name, g.measured, g.scaled_limit);
    }
    for (k, v) in &outcome.notes {
        println!("note {k}: {v:.6e}");
    }
    println!("{}: {} ({} file(s) in {})", experiment.name(), if pass { "pass" } else { "FAIL" }, manifest.outputs.len() + 1, cli.out.display());
    if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
