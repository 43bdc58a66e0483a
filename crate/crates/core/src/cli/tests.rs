use super::*;
use crate::error::Error;
use crate::exec::Execution;

fn quiet_simulate() -> RunConfig {
    RunConfig {
        command: Command::Simulate,
        modes: 8,
        points: 16,
        mu: 0.0,
        horizon: 0.02,
        dt: 1e-3,
        n_samples: 2,
        ..RunConfig::default()
    }
}

fn noisy_simulate() -> RunConfig {
    RunConfig {
        mu: 0.5,
        n_samples: 3,
        ..quiet_simulate()
    }
}

fn field_of(e: &Error) -> Option<&str> {
    match e {
        Error::Config { field, .. } => Some(field),
        _ => None,
    }
}

#[test]
fn unknown_key_is_named() {
    let e = RunConfig::from_toml("command = \"simulate\"\nmodez = 3\n").unwrap_err();
    assert_eq!(field_of(&e), Some("modez"));
    assert_eq!(e.exit_code(), 2);
}

#[test]
fn wrong_type_is_named() {
    let e = RunConfig::from_toml("seed = \"seven\"\n").unwrap_err();
    assert_eq!(field_of(&e), Some("seed"));
}

#[test]
fn broken_syntax_is_a_parse_error() {
    let e = RunConfig::from_toml("seed = 1\n]]\n").unwrap_err();
    assert!(matches!(e, Error::Parse { .. }));
    assert_eq!(e.exit_code(), 2);
}

#[test]
fn validation_names_the_field() {
    let odd = RunConfig {
        modes: 7,
        ..quiet_simulate()
    };
    assert_eq!(field_of(&odd.validate().unwrap_err()), Some("modes"));

    let few = RunConfig {
        n_samples: 1,
        ..quiet_simulate()
    };
    assert_eq!(field_of(&few.validate().unwrap_err()), Some("n_samples"));

    let sweep = RunConfig {
        command: Command::Critical,
        deltas: vec![0.9, 0.5],
        ..RunConfig::default()
    };
    assert_eq!(field_of(&sweep.validate().unwrap_err()), Some("deltas"));

    let horizons = RunConfig {
        command: Command::Maxineq,
        delta1: 0.5,
        q: 8.0,
        dt: 0.003,
        diffusion_kind: DiffusionKind::Additive,
        ..RunConfig::default()
    };
    assert_eq!(
        field_of(&horizons.validate().unwrap_err()),
        Some("horizons")
    );
}

#[test]
fn maxineq_gate_exits_with_config_status() {
    let cfg = RunConfig {
        command: Command::Maxineq,
        delta1: 0.5,
        q: 4.0,
        diffusion_kind: DiffusionKind::Additive,
        ..RunConfig::default()
    };
    let e = cfg.validate().unwrap_err();
    assert!(matches!(e, Error::Hypothesis(_)), "{e}");
    assert_eq!(e.exit_code(), 2);
    assert!(e.to_string().contains("2/(1−δ)"));
}

#[test]
fn hash_ignores_output_dir_only() {
    let a = RunConfig::default();
    let b = RunConfig {
        output_dir: "elsewhere".into(),
        ..a.clone()
    };
    let c = RunConfig {
        seed: 2,
        ..a.clone()
    };
    assert_eq!(a.hash(), b.hash());
    assert_ne!(a.hash(), c.hash());
    assert_eq!(a.hash().len(), 64);
}

#[test]
fn toml_round_trip() {
    let cfg = noisy_simulate();
    assert_eq!(RunConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
}

#[test]
fn diff_of_equal_tables() {
    let t = b"a,b\n1,2\n";
    assert_eq!(diff_tables("x.csv", t, t), FileStatus::Identical);
}

#[test]
fn diff_localizes_columns() {
    let old = b"experiment,value,se\nx,1.0,0.1\ny,2.0,0.2\nz,3.0,0.3\n";
    let new = b"experiment,value,se\nx,1.0,0.1\ny,2.5,0.2\nz,3.0,0.4\n";
    match diff_tables("r.csv", old, new) {
        FileStatus::Differs {
            row_counts,
            differing_rows,
            columns,
            first_differing_line,
        } => {
            assert_eq!(row_counts, (3, 3));
            assert_eq!(differing_rows, 2);
            assert_eq!(columns, vec!["value".to_string(), "se".to_string()]);
            assert_eq!(first_differing_line, Some(3));
        }
        s => panic!("{s:?}"),
    }
}

#[test]
fn diff_of_whitespace_tables_uses_comment_header() {
    let old = b"# x y yerr\n0 1 0\n1 2 0\n";
    let new = b"# x y yerr\n0 1 0\n1 2 0.5\n";
    match diff_tables("p.dat", old, new) {
        FileStatus::Differs { columns, .. } => assert_eq!(columns, vec!["yerr".to_string()]),
        s => panic!("{s:?}"),
    }
}

#[test]
fn diff_of_truncated_table() {
    let old = b"a\n1\n2\n";
    let new = b"a\n1\n";
    match diff_tables("t.csv", old, new) {
        FileStatus::Differs {
            row_counts,
            differing_rows,
            first_differing_line,
            ..
        } => {
            assert_eq!(row_counts, (2, 1));
            assert_eq!(differing_rows, 0);
            assert_eq!(first_differing_line, Some(3));
        }
        s => panic!("{s:?}"),
    }
}

#[test]
fn quiet_simulate_is_byte_identical() {
    let cfg = quiet_simulate();
    let (a, _) = execute(&cfg, Execution::Parallel).unwrap();
    let (b, _) = execute(&cfg, Execution::Sequential).unwrap();
    assert_eq!(a, b);
    let report = a.iter().find(|x| x.name == REPORT_FILE).unwrap();
    let text = String::from_utf8(report.bytes.clone()).unwrap();
    let header = text.lines().next().unwrap();
    assert_eq!(
        header,
        "experiment,point,statistic,value,se,seed,config_hash"
    );
    let hash = cfg.hash();
    for line in text.lines().skip(1) {
        assert!(line.ends_with(&format!(",{},{hash}", cfg.seed)), "{line}");
    }
}

#[test]
fn run_then_replay_is_identical() {
    let root = tempfile::tempdir().unwrap();
    let cfg = noisy_simulate();
    let out = run(&cfg, root.path(), Execution::default()).unwrap();
    assert!(out.dir.starts_with(root.path()));
    assert_eq!(out.manifest.config_hash, cfg.hash());
    for f in &out.manifest.files {
        let bytes = std::fs::read(out.dir.join(&f.name)).unwrap();
        assert_eq!(hex_digest(&bytes), f.sha256);
    }
    let r = replay(&out.dir.join(MANIFEST_FILE), Execution::default()).unwrap();
    assert!(r.identical(), "{r:?}");

    let again = run(&cfg, root.path(), Execution::default()).unwrap();
    assert_ne!(again.dir, out.dir);
}

fn replay_after_edit(edit: impl FnOnce(&mut RunConfig)) -> ReplayReport {
    let root = tempfile::tempdir().unwrap();
    let cfg = noisy_simulate();
    let out = run(&cfg, root.path(), Execution::default()).unwrap();
    let mut changed = cfg.clone();
    edit(&mut changed);
    std::fs::write(out.dir.join(CONFIG_FILE), changed.to_toml()).unwrap();
    replay(&out.dir.join(MANIFEST_FILE), Execution::default()).unwrap()
}

fn report_status(r: &ReplayReport) -> &FileStatus {
    &r.files
        .iter()
        .find(|f| f.name == REPORT_FILE)
        .unwrap()
        .status
}

#[test]
fn replay_reports_changed_seed() {
    let r = replay_after_edit(|c| c.seed += 1);
    assert!(r.config_changed);
    assert!(!r.identical());
    match report_status(&r) {
        FileStatus::Differs {
            row_counts,
            differing_rows,
            columns,
            ..
        } => {
            assert_eq!(row_counts.0, row_counts.1);
            assert_eq!(*differing_rows, row_counts.0);
            assert!(columns.contains(&"seed".to_string()));
        }
        s => panic!("{s:?}"),
    }
}

#[test]
fn replay_localizes_changed_sample_count() {
    let r = replay_after_edit(|c| c.n_samples = 5);
    let FileStatus::Differs {
        columns,
        differing_rows,
        ..
    } = report_status(&r)
    else {
        panic!("{r:?}")
    };
    assert!(*differing_rows > 0);
    for c in columns {
        assert!(["value", "se", "config_hash"].contains(&c.as_str()), "{c}");
    }
    assert!(columns.contains(&"value".to_string()));
}

#[test]
fn replay_without_config_fails() {
    let root = tempfile::tempdir().unwrap();
    let out = run(&quiet_simulate(), root.path(), Execution::default()).unwrap();
    std::fs::remove_file(out.dir.join(CONFIG_FILE)).unwrap();
    let e = replay(&out.dir.join(MANIFEST_FILE), Execution::default()).unwrap_err();
    assert!(matches!(e, Error::Io { .. }));
}

#[test]
fn exit_codes() {
    use clap::Parser;
    let root = tempfile::tempdir().unwrap();
    let cfg_path = root.path().join("c.toml");
    let out = root.path().join("out");
    let bad = RunConfig {
        command: Command::Maxineq,
        delta1: 0.5,
        q: 4.0,
        diffusion_kind: DiffusionKind::Additive,
        ..RunConfig::default()
    };
    std::fs::write(&cfg_path, bad.to_toml()).unwrap();
    let args = [
        "spde-lab",
        "run",
        "--config",
        cfg_path.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ];
    assert_eq!(main_with(Cli::parse_from(args)), 2);
    assert!(!out.exists());

    std::fs::write(&cfg_path, quiet_simulate().to_toml()).unwrap();
    assert_eq!(main_with(Cli::parse_from(args)), 0);
    let dirs: Vec<_> = std::fs::read_dir(&out).unwrap().collect();
    assert_eq!(dirs.len(), 1);

    let manifest = dirs[0].as_ref().unwrap().path().join(MANIFEST_FILE);
    let replay_args = ["spde-lab", "replay", manifest.to_str().unwrap()];
    assert_eq!(main_with(Cli::parse_from(replay_args)), 0);
}

#[test]
fn selftest_passes() {
    let r = run_selftest();
    assert!(r.all_passed(), "{}", r.table());
    for m in [
        "spectral",
        "noise",
        "stoch_conv",
        "mild_solver",
        "experiments",
        "cli",
    ] {
        assert!(r.entries.iter().any(|e| e.module == m), "{m}");
    }
}
