//! End-to-end checks of the binary: exit codes, determinism, cache reuse,
//! and plot error handling.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_squidsim");

fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN).current_dir(dir).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

const SMALL_SWEEP: &str = "basis_size = 12\nflux_points = 5\ncutoff_over_omega0 = inf, 10\nzeta_mode = paper\n";

#[test]
fn sweep_writes_csv_and_json_with_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.cfg", SMALL_SWEEP);
    let out = run_in(dir.path(), &["sweep", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("results.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "flux_fraction,xi,purity_first,purity_second,current_first_A,current_second_A,\
         zeta_star,residual_first,residual_second,gap_first,gap_second,N"
    );
    assert_eq!(lines.count(), 10); // 2 cutoffs x 5 flux points
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("results.json")).unwrap()).unwrap();
    assert_eq!(json["records"].as_array().unwrap().len(), 10);
    assert!(json["content_hash"].as_str().unwrap().len() == 64);
    assert!(json.get("timestamp").is_none(), "outputs must not embed wall-clock time");
}

#[test]
fn repeated_runs_are_byte_identical_and_cached() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.cfg", SMALL_SWEEP);
    let first = run_in(dir.path(), &["sweep", "--config", &cfg]);
    assert_eq!(first.status.code(), Some(0));
    let csv1 = fs::read(dir.path().join("results.csv")).unwrap();
    let json1 = fs::read(dir.path().join("results.json")).unwrap();

    let second = run_in(dir.path(), &["sweep", "--config", &cfg]);
    assert_eq!(second.status.code(), Some(0));
    assert!(
        String::from_utf8_lossy(&second.stderr).contains("cache hit"),
        "second run should log the cache hit"
    );
    assert_eq!(csv1, fs::read(dir.path().join("results.csv")).unwrap());
    assert_eq!(json1, fs::read(dir.path().join("results.json")).unwrap());

    // determinism holds without the cache too
    let no_cache = format!("{SMALL_SWEEP}cache = off\noutput_csv = fresh.csv\noutput_json = fresh.json\n");
    let cfg2 = write_config(dir.path(), "fresh.cfg", &no_cache);
    for _ in 0..2 {
        assert_eq!(run_in(dir.path(), &["sweep", "--config", &cfg2]).status.code(), Some(0));
    }
    assert_eq!(csv1, fs::read(dir.path().join("fresh.csv")).unwrap());
}

#[test]
fn finite_temperature_exits_2_naming_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.cfg", "temperature_K = 4\n");
    let out = run_in(dir.path(), &["sweep", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("temperature_K"));
}

#[test]
fn unparsable_config_exits_2_with_line_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.cfg", "basis_size = 12\nwibble = 3\n");
    let out = run_in(dir.path(), &["sweep", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 2") && err.contains("wibble"), "{err}");
}

#[test]
fn plot_renders_each_figure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.cfg", SMALL_SWEEP);
    assert_eq!(run_in(dir.path(), &["sweep", "--config", &cfg]).status.code(), Some(0));
    for fig in ["fig1", "fig2", "fig3"] {
        let name = format!("{fig}.svg");
        let out = run_in(dir.path(), &["plot", "--results", "results.csv", "--figure", fig, "--output", &name]);
        assert_eq!(out.status.code(), Some(0), "{fig}: {}", String::from_utf8_lossy(&out.stderr));
        let svg = fs::read_to_string(dir.path().join(&name)).unwrap();
        assert!(svg.starts_with("<svg") && svg.contains("<polyline"));
        if fig == "fig3" {
            assert!(svg.contains("µA"));
        }
    }
}

#[test]
fn plot_missing_columns_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("thin.csv"), "flux_fraction,xi\n0,0\n").unwrap();
    let out = run_in(dir.path(), &["plot", "--results", "thin.csv", "--figure", "fig1", "--output", "x.svg"]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("purity_first"), "{err}");
}

#[test]
fn plot_empty_results_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("empty.csv"), "").unwrap();
    let out = run_in(dir.path(), &["plot", "--results", "empty.csv", "--figure", "fig2", "--output", "x.svg"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn verify_list_prints_oracles_without_running() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_in(dir.path(), &["verify", "--list"]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("lindblad-defect-order1"));
    assert!(stdout.contains("kernel-dissipation-quadrature"));
}

#[test]
fn verify_fault_injection_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let clean = run_in(dir.path(), &["verify"]);
    assert_eq!(clean.status.code(), Some(0), "{}", String::from_utf8_lossy(&clean.stdout));
    let faulty = run_in(dir.path(), &["verify", "--inject-fault"]);
    assert_eq!(faulty.status.code(), Some(1));
    let stdout = String::from_utf8_lossy(&faulty.stdout);
    assert!(stdout.contains("FAIL") && stdout.contains("lindblad-defect-order1"), "{stdout}");
}

#[test]
fn env_override_changes_results() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.cfg", "basis_size = 12\nflux_fraction = 0.3\ncache = off\n");
    let out = Command::new(BIN)
        .current_dir(dir.path())
        .env("SQUIDSIM_BASIS_SIZE", "14")
        .args(["sweep", "--config", &cfg])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("results.csv")).unwrap();
    let row = csv.lines().nth(1).unwrap();
    assert!(row.ends_with(",14"), "env override should set N = 14: {row}");
}

#[test]
fn validate_reports_violations() {
    let dir = tempfile::tempdir().unwrap();
    let good = write_config(dir.path(), "good.cfg", "basis_size = 12\n");
    assert_eq!(run_in(dir.path(), &["validate", "--config", &good]).status.code(), Some(0));
    let bad = write_config(dir.path(), "bad.cfg", "inductance_H = -1\n");
    let out = run_in(dir.path(), &["validate", "--config", &bad]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn sweep_with_failing_rows_exits_nonzero_with_notes() {
    // near-zero damping leaves the Liouvillian gap below the uniqueness
    // threshold, so the point fails while the run keeps going
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "degenerate.cfg",
        "basis_size = 10\nflux_fraction = 0.2\ngamma_over_omega0 = 1e-18\ncache = off\n",
    );
    let out = run_in(dir.path(), &["sweep", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("row failed"));
    let csv = fs::read_to_string(dir.path().join("results.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().contains("NaN"));
}
