//! End-to-end tests: spawn the real binary against temp-dir configs and
//! check output files, stdout verdicts, and exit codes.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_alpha-cir");

/// A config in the jump-diffusion regime used throughout the library tests
/// (a = 1.03, k = 4, sigma1 = 0.4, sigma2 = 0.5, alpha = 1.9), with a small
/// Monte Carlo shape so every invocation stays fast.
fn base_config() -> String {
    r#"
[model]
a = 1.03
k = 4.0
sigma1 = 0.4
sigma2 = 0.5
alpha = 1.9
x0 = 0.03

[driver]
kind = "stable"
alpha = 1.9

[grid]
horizon = 1.0
n = 128

[mc]
num_paths = 64
base_grids = [4, 8]
seed = 42
parallel_workers = 1
"#
    .to_string()
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn data_rows(file: &Path) -> Vec<String> {
    fs::read_to_string(file)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#') && !l.is_empty())
        .map(str::to_string)
        .collect()
}

#[test]
fn simulate_writes_a_positive_path() {
    let dir = TempDir::new().unwrap();
    let config = write_config(dir.path(), &base_config());
    let out = run(&["simulate", "--config", &config, "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let rows = data_rows(&dir.path().join("path.csv"));
    assert_eq!(rows.len(), 129, "one state per grid node, x0 included");
    for row in &rows {
        let x: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
        assert!(x >= 0.0, "negative state in {row}");
    }
}

#[test]
fn simulate_is_byte_deterministic_and_seed_sensitive() {
    let dir = TempDir::new().unwrap();
    let config = write_config(dir.path(), &base_config());
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    let out_c = dir.path().join("c");

    assert!(run(&["simulate", "--config", &config, "--out", out_a.to_str().unwrap()])
        .status
        .success());
    assert!(run(&["simulate", "--config", &config, "--out", out_b.to_str().unwrap()])
        .status
        .success());
    assert!(run(&[
        "simulate",
        "--config",
        &config,
        "--seed",
        "7",
        "--out",
        out_c.to_str().unwrap()
    ])
    .status
    .success());

    let a = fs::read(out_a.join("path.csv")).unwrap();
    let b = fs::read(out_b.join("path.csv")).unwrap();
    let c = fs::read(out_c.join("path.csv")).unwrap();
    assert_eq!(a, b, "same config, same bytes");
    assert_ne!(a, c, "--seed must change the trajectory");
}

#[test]
fn simulate_deterministic_config_reaches_the_ode_value() {
    // sigma1 = sigma2 = 0 collapses the scheme to a deterministic recursion
    // whose n = 2^10 terminal value is 0.253333... for these coefficients.
    let dir = TempDir::new().unwrap();
    let text = base_config()
        .replace("sigma1 = 0.4", "sigma1 = 0.0")
        .replace("sigma2 = 0.5", "sigma2 = 0.0")
        .replace("n = 128", "n = 1024");
    let config = write_config(dir.path(), &text);
    let out = run(&["simulate", "--config", &config, "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success());

    let rows = data_rows(&dir.path().join("path.csv"));
    assert_eq!(rows.len(), 1025);
    let last: f64 = rows.last().unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!((last - 0.2533331921528130).abs() < 1e-3, "terminal {last}");
}

#[test]
fn strong_error_outputs_match_across_worker_counts() {
    let dir = TempDir::new().unwrap();
    let config = write_config(dir.path(), &base_config());
    let out_1 = dir.path().join("w1");
    let out_8 = dir.path().join("w8");

    let run_1 = run(&[
        "strong-error",
        "--config",
        &config,
        "--workers",
        "1",
        "--out",
        out_1.to_str().unwrap(),
    ]);
    let run_8 = run(&[
        "strong-error",
        "--config",
        &config,
        "--workers",
        "8",
        "--out",
        out_8.to_str().unwrap(),
    ]);
    assert!(run_1.status.success(), "{}", String::from_utf8_lossy(&run_1.stderr));
    assert!(run_8.status.success(), "{}", String::from_utf8_lossy(&run_8.stderr));

    let csv_1 = fs::read(out_1.join("strong-error.csv")).unwrap();
    let csv_8 = fs::read(out_8.join("strong-error.csv")).unwrap();
    assert_eq!(csv_1, csv_8, "worker count must not leak into the artifact");

    let rows = data_rows(&out_1.join("strong-error.csv"));
    assert_eq!(rows.len(), 2, "one row per base grid");
    for (row, n) in rows.iter().zip([4, 8]) {
        assert_eq!(row.split(',').next().unwrap(), n.to_string());
    }

    let svg = fs::read_to_string(out_1.join("strong-error.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
    assert!(svg.contains("#d62728"), "red reference line present");
}

#[test]
fn probe_mgf_prints_a_pass_verdict_and_writes_csv() {
    let dir = TempDir::new().unwrap();
    let text = format!(
        "{}\n[probe]\nkind = \"mgf\"\nq_list = [1.0]\ndt = 0.01\nnum_draws = 200000\n",
        base_config().replace("alpha = 1.9", "alpha = 1.5")
    );
    let config = write_config(dir.path(), &text);
    let out = run(&["probe", "--config", &config, "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("PASS mgf"), "stdout was: {stdout}");

    let rows = data_rows(&dir.path().join("probe.csv"));
    assert_eq!(rows.len(), 1);
    assert!(rows[0].starts_with("mgf,"));
    assert!(rows[0].contains(",true,"));
}

#[test]
fn sweep_writes_indexed_outputs() {
    let dir = TempDir::new().unwrap();
    let text = format!(
        "{}\n[[sweep]]\nlabel = \"j1\"\nsigma2 = 0.1\n\n[[sweep]]\nsigma2 = 0.2\n",
        base_config()
    );
    let config = write_config(dir.path(), &text);
    let out = run(&["sweep", "--config", &config, "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    for stem in ["sweep-1-j1", "sweep-2"] {
        assert!(dir.path().join(format!("{stem}.csv")).exists(), "missing {stem}.csv");
        assert!(dir.path().join(format!("{stem}.svg")).exists(), "missing {stem}.svg");
    }
    let header = fs::read_to_string(dir.path().join("sweep-1-j1.csv")).unwrap();
    assert!(header.contains("sigma2 = 0.1"), "header records the resolved override");
}

#[test]
fn usage_and_config_errors_exit_with_code_one() {
    let dir = TempDir::new().unwrap();

    // Missing --config.
    let out = run(&["simulate"]);
    assert_eq!(out.status.code(), Some(1));

    // Unknown subcommand.
    let out = run(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(1));

    // Nonexistent config file.
    let out = run(&["simulate", "--config", "/nonexistent/run.toml"]);
    assert_eq!(out.status.code(), Some(1));

    // Config violating a model invariant (a - sigma1^2/2 <= 0).
    let bad = write_config(dir.path(), &base_config().replace("a = 1.03", "a = 0.05"));
    let out = run(&["simulate", "--config", &bad, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("a - sigma1^2/2"));

    // probe without a [probe] section.
    let plain = write_config(dir.path(), &base_config());
    let out = run(&["probe", "--config", &plain, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));

    // sweep without [[sweep]] entries.
    let out = run(&["sweep", "--config", &plain, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));

    // Help and version are not errors.
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
}

#[test]
fn explosion_abort_exits_with_code_two() {
    // x0 at the edge of the representable range overflows the first step of
    // every path, tripping the exploded-fraction abort.
    let dir = TempDir::new().unwrap();
    let text = base_config()
        .replace("x0 = 0.03", "x0 = 9e307")
        .replace("alpha = 1.9", "alpha = 1.05")
        .replace("a = 1.03", "a = 2.0")
        .replace("sigma2 = 0.5", "sigma2 = 1.0");
    let config = write_config(dir.path(), &text);
    let out = run(&["strong-error", "--config", &config, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}
