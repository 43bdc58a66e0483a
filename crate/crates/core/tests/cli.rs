use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_spde-lab");

const QUIET: &str = r#"
command = "simulate"
seed = 4
modes = 8
points = 16
mu = 0.0
horizon = 0.02
dt = 0.001
n_samples = 2
"#;

fn spde_lab(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env_remove("SPDE_LAB_SEED")
        .env_remove("SPDE_LAB_OUT")
        .env_remove("SPDE_LAB_CONFIG")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn run_dir(stdout: &[u8]) -> PathBuf {
    PathBuf::from(
        String::from_utf8_lossy(stdout)
            .lines()
            .last()
            .unwrap()
            .trim(),
    )
}

#[test]
fn quiet_simulation_twice_is_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "quiet.toml", QUIET);
    let out = tmp.path().join("runs");
    let args = [
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ];
    let a = spde_lab(&args);
    let b = spde_lab(&args);
    assert!(a.status.success() && b.status.success());
    let (da, db) = (run_dir(&a.stdout), run_dir(&b.stdout));
    assert_ne!(da, db);
    for name in ["report.csv", "trajectory_0.csv", "energy.dat"] {
        assert_eq!(
            fs::read(da.join(name)).unwrap(),
            fs::read(db.join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn seed_flag_overrides_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "quiet.toml", QUIET);
    let out = tmp.path().join("runs");
    let o = spde_lab(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--seed",
        "99",
    ]);
    assert!(o.status.success());
    let report = fs::read_to_string(run_dir(&o.stdout).join("report.csv")).unwrap();
    assert!(report
        .lines()
        .skip(1)
        .all(|l| l.split(',').nth(5) == Some("99")));
}

#[test]
fn moment_gate_exits_two_with_json_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "gate.toml",
        "command = \"maxineq\"\ndelta1 = 0.5\nq = 4.0\ndiffusion_kind = \"additive\"\n",
    );
    let out = tmp.path().join("runs");
    let o = spde_lab(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "hypothesis");
    assert!(err["message"].as_str().unwrap().contains("q > 2/(1−δ)"));
    assert!(!out.exists());
}

#[test]
fn invalid_field_is_named_on_stderr() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "bad.toml",
        "command = \"simulate\"\nmodes = 7\n",
    );
    let o = spde_lab(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["field"], "modes");
}

#[test]
fn missing_config_is_an_io_error() {
    let o = spde_lab(&["run", "--config", "/nonexistent/config.toml"]);
    assert_eq!(o.status.code(), Some(1));
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "io");
}

#[test]
fn replay_detects_drift() {
    let tmp = tempfile::tempdir().unwrap();
    let noisy = QUIET.replace("mu = 0.0", "mu = 0.5");
    let cfg = write_config(tmp.path(), "noisy.toml", &noisy);
    let out = tmp.path().join("runs");
    let o = spde_lab(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let dir = run_dir(&o.stdout);
    let manifest = dir.join("manifest.json");

    let same = spde_lab(&["replay", manifest.to_str().unwrap()]);
    assert_eq!(same.status.code(), Some(0));

    let recorded = fs::read_to_string(dir.join("config.toml")).unwrap();
    fs::write(
        dir.join("config.toml"),
        recorded.replace("seed = 4", "seed = 5"),
    )
    .unwrap();
    let drift = spde_lab(&["replay", manifest.to_str().unwrap()]);
    assert_eq!(drift.status.code(), Some(4));
    let report: serde_json::Value = serde_json::from_slice(&drift.stdout).unwrap();
    assert_eq!(report["config_changed"], true);
    let csv = report["files"]
        .as_array()
        .unwrap()
        .iter()
        .find(|f| f["name"] == "report.csv")
        .unwrap();
    assert_eq!(csv["status"], "differs");
    assert!(csv["differing_rows"].as_u64().unwrap() > 0);
}

#[test]
fn selftest_prints_table() {
    let o = spde_lab(&["selftest"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("12/12 checks passed"), "{text}");
}
