//! Flat `key = value` run configuration.
//!
//! Grammar, one entry per line:
//!
//! ```text
//! # comment
//! key = value
//! ```
//!
//! A value is a number, a comma-separated list of numbers, or a word. Numbers
//! may carry a `pi` suffix (`pi`, `10pi`, `0.5pi`). Inside integer lists `a:b`
//! stands for the inclusive range `a, a+1, ..., b`. Every key must be one the
//! experiment knows; the defaults below list them all. Precedence: command-line
//! flag, then config file, then default.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Experiment {
    Table1,
    Zeros,
    WnProfile,
    NrbcAccuracy,
    TimeConvergence,
    SpaceConvergence,
    Simulate,
    ConvBench,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Table1 => "table1",
            Experiment::Zeros => "zeros",
            Experiment::WnProfile => "wn-profile",
            Experiment::NrbcAccuracy => "nrbc-accuracy",
            Experiment::TimeConvergence => "time-convergence",
            Experiment::SpaceConvergence => "space-convergence",
            Experiment::Simulate => "simulate",
            Experiment::ConvBench => "conv-bench",
        }
    }

    /// Default configuration: the published experimental settings.
    pub fn defaults(self) -> Vec<(&'static str, &'static str)> {
        const DATA: [(&str, &str); 6] = [("b0", "2"), ("a1", "10"), ("iota", "0.1"), ("xs", "2.1"), ("ys", "2.1"), ("fft_grid", "256")];
        const WAVE_MAKER: [(&str, &str); 8] = [
            ("b", "5"),
            ("c", "5"),
            ("omega", "pi"),
            ("p", "6"),
            ("m", "15"),
            ("theta", "0.25"),
            ("vartheta", "0.5"),
            ("allow_unstable", "0"),
        ];
        let mut keys: Vec<(&str, &str)> = match self {
            Experiment::Table1 => vec![("d", "2"), ("b", "3"), ("c", "5"), ("modes", "0:9"), ("times", "0.1,2"), ("gate", "1e-8")],
            Experiment::Zeros => vec![("dimensions", "2,3"), ("modes", "0:64"), ("tol", "1e-12")],
            Experiment::WnProfile => vec![
                ("modes", "0,1,2,5,10,20"),
                ("r_min", "1e-3"),
                ("r_max", "40"),
                ("points", "400"),
                ("dump_kernels", "1"),
                ("d", "2"),
                ("b", "3"),
                ("c", "5"),
            ],
            Experiment::NrbcAccuracy => {
                let mut v = DATA.to_vec();
                v.extend([
                    ("c", "5"),
                    ("p", "2"),
                    ("m", "32"),
                    ("omegas", "10pi,10pi,20pi,20pi"),
                    ("bs", "2.22,2.75,2.38,2.87"),
                    ("times", "0.5,1,5,10"),
                    ("gate", "1e-9"),
                ]);
                v
            }
            Experiment::TimeConvergence => {
                let mut v = DATA.to_vec();
                v.extend(WAVE_MAKER);
                v.extend([("degree", "50"), ("dts", "1e-3,5e-4,1e-4,5e-5"), ("times", "1,2,3,4"), ("order", "2"), ("order_tol", "0.05")]);
                v
            }
            Experiment::SpaceConvergence => {
                let mut v = DATA.to_vec();
                v.extend(WAVE_MAKER);
                v.extend([("dt", "1e-5"), ("degrees", "8,10,16,32"), ("times", "0.5,1,1.5,2,2.5,3,3.5,4"), ("floor", "1e-7"), ("gate", "1e-6")]);
                v
            }
            Experiment::Simulate => {
                let mut v = DATA.to_vec();
                v.extend(WAVE_MAKER);
                v.extend([("degree", "32"), ("dt", "1e-3"), ("times", "0,0.5,1,2"), ("phi_points", "64"), ("trace_stride", "10"), ("gate", "1e-3")]);
                v
            }
            Experiment::ConvBench => vec![
                ("d", "2"),
                ("n", "9"),
                ("b", "3"),
                ("c", "5"),
                ("dt", "6e-4"),
                ("steps", "1000,10000,100000"),
                ("direct_max_steps", "10000"),
                ("repeats", "5"),
                ("gate", "1e-7"),
                ("slope_tol", "0.1"),
            ],
        };
        if self != Experiment::Zeros {
            keys.extend(QUADRATURE);
        }
        keys
    }
}

/// Branch-cut quadrature overrides shared by every kernel-building experiment.
pub const QUADRATURE: [(&str, &str); 8] = [
    ("nodes_per_panel", "16"),
    ("exponent_step", "3"),
    ("exponent_growth", "0.1"),
    ("left_cutoff", "45"),
    ("tail", "25"),
    ("small_n_upper", "30"),
    ("grading_ratio", "0.1"),
    ("floor_n0", "1e-14"),
];

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

type Res<T> = Result<T, ConfigError>;

fn err<T>(msg: impl Into<String>) -> Res<T> {
    Err(ConfigError(msg.into()))
}

/// Resolved key-value configuration of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub experiment: Experiment,
    values: BTreeMap<String, String>,
}

impl RunConfig {
    pub fn new(experiment: Experiment) -> Self {
        let values = experiment.defaults().into_iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        RunConfig { experiment, values }
    }

    pub fn set(&mut self, key: &str, value: &str) -> Res<()> {
        match self.values.get_mut(key) {
            Some(slot) => {
                *slot = value.trim().to_string();
                Ok(())
            }
            None => err(format!("unknown key `{key}` for {}; known keys: {}", self.experiment.name(), self.keys().join(", "))),
        }
    }

    pub fn keys(&self) -> Vec<&str> {
        self.values.keys().map(String::as_str).collect()
    }

    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.values
    }

    /// Apply a config file. Keys the experiment does not use are ignored so
    /// that one file can serve several experiments.
    pub fn apply_file(&mut self, text: &str) -> Res<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return err(format!("config line {}: expected `key = value`, got `{line}`", i + 1));
            };
            let k = k.trim();
            if self.values.contains_key(k) {
                self.set(k, v)?;
            } else if !all_keys().contains(&k) {
                return err(format!("config line {}: unknown key `{k}`", i + 1));
            }
        }
        Ok(())
    }

    /// Apply `--key value` / `--key=value` pairs.
    pub fn apply_flags(&mut self, args: &[String]) -> Res<()> {
        let mut it = args.iter();
        while let Some(a) = it.next() {
            let Some(flag) = a.strip_prefix("--") else {
                return err(format!("expected `--key value`, got `{a}`"));
            };
            let (k, v) = match flag.split_once('=') {
                Some((k, v)) => (k.to_string(), v.to_string()),
                None => match it.next() {
                    Some(v) => (flag.to_string(), v.clone()),
                    None => return err(format!("flag `--{flag}` needs a value")),
                },
            };
            self.set(&k.replace('-', "_"), &v)?;
        }
        Ok(())
    }

    fn raw(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or_else(|| panic!("no default for `{key}`"))
    }

    pub fn f64(&self, key: &str) -> Res<f64> {
        parse_number(self.raw(key)).map_err(|e| ConfigError(format!("`{key}`: {e}")))
    }

    pub fn usize(&self, key: &str) -> Res<usize> {
        parse_count(self.raw(key)).map_err(|e| ConfigError(format!("`{key}`: {e}")))
    }

    pub fn flag(&self, key: &str) -> Res<bool> {
        match self.raw(key) {
            "1" | "true" | "yes" => Ok(true),
            "0" | "false" | "no" => Ok(false),
            other => err(format!("`{key}`: expected 0 or 1, got `{other}`")),
        }
    }

    pub fn f64_list(&self, key: &str) -> Res<Vec<f64>> {
        let v = self.raw(key).split(',').map(|s| parse_number(s.trim())).collect::<Result<Vec<_>, _>>();
        let v = v.map_err(|e| ConfigError(format!("`{key}`: {e}")))?;
        if v.is_empty() {
            return err(format!("`{key}` is empty"));
        }
        Ok(v)
    }

    pub fn usize_list(&self, key: &str) -> Res<Vec<usize>> {
        let mut out = Vec::new();
        for part in self.raw(key).split(',') {
            let part = part.trim();
            let bad = |e: String| ConfigError(format!("`{key}`: {e}"));
            match part.split_once(':') {
                Some((a, b)) => {
                    let (a, b) = (parse_count(a).map_err(bad)?, parse_count(b).map_err(bad)?);
                    if a > b {
                        return err(format!("`{key}`: empty range `{part}`"));
                    }
                    out.extend(a..=b);
                }
                None => out.push(parse_count(part).map_err(bad)?),
            }
        }
        Ok(out)
    }
}

fn all_keys() -> Vec<&'static str> {
    use Experiment::*;
    let mut keys: Vec<&str> = [Table1, Zeros, WnProfile, NrbcAccuracy, TimeConvergence, SpaceConvergence, Simulate, ConvBench]
        .iter()
        .flat_map(|e| e.defaults().into_iter().map(|(k, _)| k))
        .collect();
    keys.sort_unstable();
    keys.dedup();
    keys
}

/// A float with an optional `pi` suffix.
pub fn parse_number(s: &str) -> Result<f64, String> {
    let s = s.trim();
    let (body, scale) = match s.strip_suffix("pi") {
        Some("") => ("1", PI),
        Some(b) => (b.trim_end_matches('*'), PI),
        None => (s, 1.0),
    };
    match body.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v * scale),
        _ => Err(format!("`{s}` is not a finite number")),
    }
}

fn parse_count(s: &str) -> Result<usize, String> {
    s.trim().parse().map_err(|_| format!("`{}` is not a non-negative integer", s.trim()))
}
