use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn loghold(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_loghold"))
        .args(args)
        .env_remove("LOGHOLD_OUT")
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn without_wall_clock(report: &Path) -> serde_json::Value {
    let mut v: serde_json::Value = serde_json::from_str(&fs::read_to_string(report).unwrap()).unwrap();
    v.as_object_mut().unwrap().remove("wall_clock");
    v
}

#[test]
fn every_shipped_config_validates() {
    let mut seen = 0;
    for dir in [configs(), configs().join("controls")] {
        for entry in fs::read_dir(dir).unwrap() {
            let p = entry.unwrap().path();
            if p.extension().is_some_and(|e| e == "toml") {
                let out = loghold(&["validate-config", "--config", path(&p)]);
                assert_eq!(out.status.code(), Some(0), "{}: {}", p.display(), String::from_utf8_lossy(&out.stderr));
                seen += 1;
            }
        }
    }
    assert!(seen >= 10);
}

#[test]
fn zero_velocity_control_passes_and_is_reproducible() {
    let cfg = configs().join("controls/bilipschitz_zero_velocity.toml");
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let out = loghold(&["run", "--config", path(&cfg), "--out", path(a.path()), "--quiet"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    let out = loghold(&["run", "--config", path(&cfg), "--out", path(b.path()), "--jobs", "1"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("overall: Pass"));
    assert_eq!(
        without_wall_clock(&a.path().join("report.json")),
        without_wall_clock(&b.path().join("report.json"))
    );
    for f in ["pairs.csv", "budget.csv", "mu_refinement.csv", "plots/index.json"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn unwritable_output_is_a_single_line_error() {
    let tmp = tempfile::tempdir().unwrap();
    let blocker = tmp.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let cfg = configs().join("controls/bilipschitz_zero_velocity.toml");
    let out = loghold(&["run", "--config", path(&cfg), "--out", path(&blocker.join("sub"))]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert_eq!(err.trim_end().lines().count(), 1, "{err}");
    assert!(err.starts_with("loghold: error: "), "{err}");
}

#[test]
fn config_errors_exit_one() {
    let cfg = configs().join("holder_sandwich.toml");
    let out = loghold(&["validate-config", "--config", path(&cfg), "--set", "modulus.exponents=[1.5]"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("holder requires 0 < β ≤ 1"));
    let out = loghold(&["validate-config", "--config", path(&cfg), "--set", "time.nonsense=1"]);
    assert_eq!(out.status.code(), Some(1));
    let out = loghold(&["validate-config", "--config", "/nonexistent/config.toml"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn outcome_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("controls/holder_on_log_data.toml");
    let out = loghold(&["run", "--config", path(&cfg), "--out", path(&tmp.path().join("a")), "--quiet"]);
    assert_eq!(out.status.code(), Some(2), "indeterminate");
    let cfg = configs().join("controls/holder_sandwich_zero_velocity.toml");
    let out = loghold(&[
        "run",
        "--config",
        path(&cfg),
        "--out",
        path(&tmp.path().join("b")),
        "--set",
        "tolerances.final_ratio=2.0",
        "--quiet",
    ]);
    assert_eq!(out.status.code(), Some(3), "fail");
}

#[test]
fn output_dir_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("controls/log_ratio_zero_velocity.toml");
    let out = Command::new(env!("CARGO_BIN_EXE_loghold"))
        .args(["run", "--config", path(&cfg), "--quiet"])
        .env("LOGHOLD_OUT", tmp.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(tmp.path().join("report.json").exists());
}

#[test]
fn several_configs_run_into_named_subdirectories() {
    let tmp = tempfile::tempdir().unwrap();
    let out = loghold(&[
        "run",
        "--config",
        path(&configs().join("controls/bilipschitz_zero_velocity.toml")),
        "--config",
        path(&configs().join("controls/log_ratio_zero_velocity.toml")),
        "--out",
        path(tmp.path()),
        "--quiet",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(tmp.path().join("bilipschitz_zero_velocity/report.json").exists());
    assert!(tmp.path().join("log_ratio_zero_velocity/report.json").exists());
}

#[test]
fn emit_plots_regenerates_bundle() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("controls/log_ratio_zero_velocity.toml");
    assert_eq!(loghold(&["run", "--config", path(&cfg), "--out", path(tmp.path()), "--quiet"]).status.code(), Some(0));
    let original = fs::read(tmp.path().join("plots/index.json")).unwrap();
    let other = tmp.path().join("replot");
    let report = tmp.path().join("report.json");
    let out = loghold(&["emit-plots", "--report", path(&report), "--out", path(&other)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(fs::read(other.join("plots/index.json")).unwrap(), original);
    let out = loghold(&["emit-plots", "--report", path(&tmp.path().join("missing.json"))]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn list_scenarios_prints_catalogs() {
    let out = loghold(&["list-scenarios"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    for name in ["preservation", "euler_growth", "linear_strain", "cellular", "log_holder", "bahouri_chemin", "direction_sweep"] {
        assert!(text.contains(name), "{name} missing");
    }
}
