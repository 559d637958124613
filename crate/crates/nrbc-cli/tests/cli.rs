use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn nrbc(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nrbc"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("NRBC_THREADS")
        .output()
        .expect("binary runs")
}

fn csv(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path).unwrap().lines().map(|l| l.split(',').map(str::to_string).collect()).collect()
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn table1_matches_published_samples() {
    let dir = tempfile::tempdir().unwrap();
    let out = nrbc(&["table1"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = csv(&dir.path().join("table1.csv"));
    assert_eq!(rows[0], ["n", "t", "sigma", "published", "rel_err"]);
    assert_eq!(rows.len(), 21);
    let n2 = rows.iter().find(|r| r[0] == "2" && r[1].parse::<f64>().unwrap() == 2.0).unwrap();
    let v: f64 = n2[2].parse().unwrap();
    assert!((v / -3.516167498630298e-3 - 1.0).abs() < 1e-8);
    // 17 significant digits
    assert_eq!(n2[2].split('e').next().unwrap().trim_start_matches('-').len(), 18);
    let m = manifest(dir.path());
    assert_eq!(m["experiment"], "table1");
    assert_eq!(m["pass"], true);
    assert_eq!(m["config"]["b"], "3");
}

#[test]
fn reruns_are_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        assert!(nrbc(&["--threads", "1", "zeros", "--modes", "0:12"], d.path()).status.success());
    }
    assert_eq!(fs::read(a.path().join("zeros.csv")).unwrap(), fs::read(b.path().join("zeros.csv")).unwrap());
    let rows = csv(&a.path().join("zeros.csv"));
    assert_eq!(rows[0], ["order_kind", "n", "j", "re", "im", "residual"]);
    // integer orders: n even -> n zeros, n odd -> n - 1; half orders: n zeros
    let int: usize = (0..=12).map(|n| if n % 2 == 0 { n } else { n - 1 }).sum();
    let half: usize = (0..=12).sum();
    assert_eq!(rows.len() - 1, int + half);
}

#[test]
fn exit_codes_follow_gates_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let strict = nrbc(&["table1", "--gate", "1e-15"], dir.path());
    assert_eq!(strict.status.code(), Some(1));
    assert_eq!(manifest(dir.path())["pass"], false);
    let relaxed = nrbc(&["--gate-scale", "1e5", "table1", "--gate", "1e-15"], dir.path());
    assert_eq!(relaxed.status.code(), Some(0));
    assert_eq!(nrbc(&["table1", "--nonsense", "1"], dir.path()).status.code(), Some(2));
    assert_eq!(nrbc(&["table1", "--c", "-1"], dir.path()).status.code(), Some(2));
    assert_eq!(nrbc(&["--gate-scale", "0", "table1"], dir.path()).status.code(), Some(2));
}

#[test]
fn config_file_then_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# shared file\nmodes = 1, 4\ntimes = 0.5\nomegas = 10pi  # used by other experiments\n").unwrap();
    let out = nrbc(&["table1", "--config", cfg.to_str().unwrap(), "--times", "1"], dir.path());
    assert!(out.status.success());
    let rows = csv(&dir.path().join("table1.csv"));
    assert_eq!(rows.len(), 3);
    assert!(rows[1..].iter().all(|r| r[1].parse::<f64>().unwrap() == 1.0));
    // no published value at t = 1, so no gate applies
    assert_eq!(manifest(dir.path())["gates"].as_array().unwrap().len(), 0);
    fs::write(&cfg, "bogus = 1\n").unwrap();
    assert_eq!(nrbc(&["table1", "--config", cfg.to_str().unwrap()], dir.path()).status.code(), Some(2));
}

#[test]
fn simulate_starts_from_rest() {
    let dir = tempfile::tempdir().unwrap();
    let out = nrbc(&["simulate", "--m", "3", "--degree", "12", "--dt", "1e-2", "--times", "0,1", "--fft_grid", "64", "--phi_points", "8", "--gate", "0.1"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = csv(&dir.path().join("field.csv"));
    assert_eq!(rows[0], ["t", "r", "phi", "U_exact", "U_num"]);
    for r in rows[1..].iter().filter(|r| r[0].parse::<f64>().unwrap() == 0.0) {
        assert_eq!(r[3].parse::<f64>().unwrap(), 0.0);
        assert_eq!(r[4].parse::<f64>().unwrap(), 0.0);
    }
    let later = rows[1..].iter().filter(|r| r[0].parse::<f64>().unwrap() == 1.0);
    assert!(later.map(|r| r[3].parse::<f64>().unwrap().abs()).fold(0.0, f64::max) > 1e-3);
    for f in ["modes.csv", "boundary_trace.csv", "manifest.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}

#[test]
fn conv_bench_reports_both_methods() {
    let dir = tempfile::tempdir().unwrap();
    let out = nrbc(&["conv-bench", "--steps", "200,400", "--repeats", "1", "--slope_tol", "10"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = csv(&dir.path().join("conv_bench.csv"));
    assert_eq!(rows.len(), 5);
    for r in &rows[1..] {
        assert!(r[4].parse::<f64>().unwrap() < 1e-7);
    }
}
