use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use log::info;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::experiments::{
    a_priori_2_check, assembled_constant, critical_sweep, maxineq_scaling, optimal_alpha,
    regularity_report, Estimate, ReportRow,
};
use crate::mild_solver::{euler_solve, picard_solve_split, sobolev_track, Trajectory};
use crate::noise::NoiseDriver;
use crate::stoch_conv::{direct_conv, factor_conv, FactorizationConfig, PathOfFields};

use super::config::{hex_digest, Command, RunConfig, Scheme};
use super::selftest::{run_selftest, SelftestReport};

pub const REPORT_FILE: &str = "report.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const CONFIG_FILE: &str = "config.toml";

/// One output file, held in memory until the run directory is written.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub name: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub seed: u64,
    pub config_hash: String,
    pub config_file: String,
    pub code_version: String,
    pub files: Vec<FileEntry>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub dir: PathBuf,
    pub manifest: Manifest,
    pub selftest: Option<SelftestReport>,
}

/// `(x, y, yerr)` series written as a `.dat` file with a gnuplot stub.
struct Plot {
    name: String,
    xlabel: &'static str,
    ylabel: &'static str,
    points: Vec<(f64, f64, f64)>,
    logscale: bool,
}

impl Plot {
    fn new(name: impl Into<String>, xlabel: &'static str, ylabel: &'static str) -> Self {
        Plot {
            name: name.into(),
            xlabel,
            ylabel,
            points: Vec::new(),
            logscale: false,
        }
    }

    fn push(&mut self, x: f64, e: &Estimate) {
        self.points.push((x, e.mean, e.se));
    }

    fn artifacts(&self) -> [Artifact; 2] {
        let mut dat = format!("# {} {} yerr\n", self.xlabel, self.ylabel);
        for (x, y, e) in &self.points {
            let _ = writeln!(dat, "{x:?} {y:?} {e:?}");
        }
        let mut gp = String::new();
        let _ = writeln!(gp, "set xlabel '{}'", self.xlabel);
        let _ = writeln!(gp, "set ylabel '{}'", self.ylabel);
        if self.logscale {
            gp.push_str("set logscale xy\n");
        }
        let _ = writeln!(
            gp,
            "plot '{}.dat' using 1:2:3 with yerrorlines title '{}'",
            self.name, self.name
        );
        [
            Artifact {
                name: format!("{}.dat", self.name),
                bytes: dat.into_bytes(),
            },
            Artifact {
                name: format!("{}.gp", self.name),
                bytes: gp.into_bytes(),
            },
        ]
    }
}

fn render_rows(rows: &[ReportRow], seed: u64, hash: &str) -> Vec<u8> {
    let mut s = String::from("experiment,point,statistic,value,se,seed,config_hash\n");
    for r in rows {
        let se = r.se.map(|v| format!("{v:?}")).unwrap_or_default();
        let _ = writeln!(
            s,
            "{},{},{},{:?},{},{},{}",
            r.experiment, r.point, r.statistic, r.value, se, seed, hash
        );
    }
    s.into_bytes()
}

fn estimate_of(xs: &[f64]) -> Result<Estimate> {
    Estimate::from_samples(xs)
}

fn simulate(
    cfg: &RunConfig,
    exec: Execution,
) -> Result<(Vec<ReportRow>, Vec<Plot>, Vec<Artifact>)> {
    let spec = cfg.problem()?;
    let solve = cfg.solve_config()?;
    let n = (spec.horizon / solve.dt).round() as usize;
    let driver = NoiseDriver::new(cfg.seed, spec.noise_dim())?;
    let runs = exec.try_map(cfg.n_samples, |i| -> Result<(Trajectory, Vec<[f64; 3]>)> {
        let incs = driver.sample_increments(i, n, solve.dt)?;
        let traj = match cfg.scheme {
            Scheme::Picard => picard_solve_split(&spec, &solve, &incs, cfg.split_depth)?,
            Scheme::Euler => euler_solve(&spec, &solve, &incs)?,
        };
        let track = sobolev_track(&traj, solve.m, solve.p)?;
        let l2: Vec<f64> = traj.states().map(|u| u.l2_norm_sq()).collect();
        let stats = (0..l2.len())
            .map(|k| [l2[k], track.w_m_p[k], track.w_1_mp[k]])
            .collect();
        Ok((traj, stats))
    })?;
    let x = "simulate";
    let mut rows = Vec::new();
    let mut energy = Plot::new("energy", "t", "E|u|^2_L2");
    let mut sob = Plot::new("sobolev", "t", "E|u|_W^{m,p}");
    let times = runs[0].0.times();
    for (k, t) in times.iter().enumerate() {
        let col = |j: usize| estimate_of(&runs.iter().map(|r| r.1[k][j]).collect::<Vec<_>>());
        let (l2, wm, w1) = (col(0)?, col(1)?, col(2)?);
        let p = format!("t={t}");
        rows.push(ReportRow::estimate(x, p.clone(), "l2_sq", &l2));
        rows.push(ReportRow::estimate(x, p.clone(), "w_m_p", &wm));
        rows.push(ReportRow::estimate(x, p, "w_1_mp", &w1));
        energy.push(*t, &l2);
        sob.push(*t, &wm);
    }
    let sups: Vec<f64> = runs
        .iter()
        .map(|r| r.1.iter().map(|v| v[1]).fold(0.0, f64::max))
        .collect();
    rows.push(ReportRow::estimate(
        x,
        "all",
        "sup_w_m_p",
        &estimate_of(&sups)?,
    ));
    if cfg.scheme == Scheme::Picard {
        let iters: Vec<f64> = runs
            .iter()
            .map(|r| r.0.picard.iter().map(|l| l.iterations()).sum::<usize>() as f64)
            .collect();
        let segments: Vec<f64> = runs.iter().map(|r| r.0.picard.len() as f64).collect();
        rows.push(ReportRow::estimate(
            x,
            "all",
            "picard_iterations",
            &estimate_of(&iters)?,
        ));
        rows.push(ReportRow::estimate(
            x,
            "all",
            "picard_segments",
            &estimate_of(&segments)?,
        ));
    }
    let snapshot = Artifact {
        name: "trajectory_0.csv".into(),
        bytes: runs[0].0.path.to_csv().into_bytes(),
    };
    Ok((rows, vec![energy, sob], vec![snapshot]))
}

fn maxineq(cfg: &RunConfig, exec: Execution) -> Result<(Vec<ReportRow>, Vec<Plot>)> {
    let report = maxineq_scaling(&cfg.maxineq_params()?, exec)?;
    let mut rows = report.rows();
    let x = "maxineq";
    match assembled_constant(cfg.alpha, cfg.q, cfg.delta1) {
        Ok(c) => rows.push(ReportRow::new(
            x,
            format!("alpha={}", cfg.alpha),
            "assembled_constant",
            c,
        )),
        Err(_) => rows.push(ReportRow::new(
            x,
            format!("alpha={}", cfg.alpha),
            "assembled_admissible",
            0.0,
        )),
    }
    if let Ok((a, c)) = optimal_alpha(cfg.q, cfg.delta1, 1000) {
        rows.push(ReportRow::new(x, "optimum", "alpha", a));
        rows.push(ReportRow::new(x, "optimum", "assembled_constant", c));
    }
    let mut scaling = Plot::new("maxineq_scaling", "T", "E sup |I|^q");
    scaling.logscale = true;
    let mut envelope = Plot::new("maxineq_envelope", "T", "C T^{q(1-delta)/2}");
    envelope.logscale = true;
    for (t, e) in report.horizons.iter().zip(&report.estimates) {
        scaling.push(*t, e);
        envelope
            .points
            .push((*t, report.envelope_constant * t.powf(report.exponent), 0.0));
    }
    Ok((rows, vec![scaling, envelope]))
}

fn factor_check(cfg: &RunConfig, exec: Execution) -> Result<(Vec<ReportRow>, Vec<Plot>)> {
    let grid = cfg.grid()?;
    let b = cfg.maxineq_params()?.profile.realize(grid)?;
    let fine_dt = cfg.dt / 2.0;
    let n_fine = (cfg.horizon / fine_dt).round() as usize;
    let fc = FactorizationConfig::new(cfg.alpha, cfg.delta1, cfg.quadrature)?;
    let driver = NoiseDriver::new(cfg.seed, 1)?;
    let dists = exec.try_map(cfg.n_samples, |i| -> Result<[f64; 2]> {
        let fine = driver.sample_increments(i, n_fine, fine_dt)?;
        let mut out = [0.0; 2];
        for (slot, factor) in [(0, 2), (1, 1)] {
            let incs = fine.coarsen(factor)?;
            let b_path =
                PathOfFields::constant(incs.dt(), incs.n_steps() + 1, std::slice::from_ref(&b))?;
            let direct = direct_conv(&b_path, &incs, cfg.delta1)?;
            let fact = factor_conv(&b_path, &incs, &fc)?;
            let num = fact.sub(&direct)?.l2_space_time_sq();
            let den = direct.l2_space_time_sq();
            out[slot] = if den > 0.0 { (num / den).sqrt() } else { 0.0 };
        }
        Ok(out)
    })?;
    let x = "factor-check";
    let coarse = estimate_of(&dists.iter().map(|d| d[0]).collect::<Vec<_>>())?;
    let finer = estimate_of(&dists.iter().map(|d| d[1]).collect::<Vec<_>>())?;
    let mut plot = Plot::new("factor_distance", "dt", "relative L2 distance");
    plot.push(cfg.dt, &coarse);
    plot.push(fine_dt, &finer);
    let ratio = if finer.mean > 0.0 {
        coarse.mean / finer.mean
    } else {
        f64::INFINITY
    };
    Ok((
        vec![
            ReportRow::estimate(x, format!("dt={}", cfg.dt), "relative_distance", &coarse),
            ReportRow::estimate(x, format!("dt={fine_dt}"), "relative_distance", &finer),
            ReportRow::new(x, "all", "refinement_ratio", ratio),
        ],
        vec![plot],
    ))
}

fn critical(cfg: &RunConfig, exec: Execution) -> Result<(Vec<ReportRow>, Vec<Plot>)> {
    let params = cfg.critical_params()?;
    let report = critical_sweep(&params, exec)?;
    let mut rows = report.rows();
    let mut plots = Vec::new();
    let mut h1 = Plot::new("critical_h1", "delta", "E int |u|^2_W12");
    let mut frac = Plot::new("critical_frac", "delta", "E |u|^2_W^{a,2}(H^-1)");
    for (i, d) in report.deltas.iter().enumerate() {
        h1.push(*d, &report.h1_integral[i]);
        frac.push(*d, &report.frac_norm[i]);
        let mut series = Plot::new(format!("critical_energy_delta{d}"), "t", "E|u|^2_L2");
        for (t, e) in report.times.iter().zip(&report.l2_series[i]) {
            series.push(*t, e);
        }
        plots.push(series);
    }
    plots.push(h1);
    plots.push(frac);
    if cfg.decompose_samples >= 2 {
        let table = a_priori_2_check(&params, cfg.decompose_samples, exec)?;
        for (i, d) in table.deltas.iter().enumerate() {
            let p = format!("delta={d}");
            for (name, e) in [
                ("frac_initial", &table.initial[i]),
                ("frac_drift", &table.drift[i]),
                ("frac_stochastic", &table.stochastic[i]),
                ("frac_total", &table.total[i]),
            ] {
                rows.push(ReportRow::estimate("a-priori-2", p.clone(), name, e));
            }
        }
    }
    Ok((rows, plots))
}

fn regularity(cfg: &RunConfig, exec: Execution) -> Result<(Vec<ReportRow>, Vec<Plot>)> {
    let report = regularity_report(&cfg.regularity_params()?, exec)?;
    let plots = report
        .rows
        .iter()
        .map(|row| {
            let mut p = Plot::new(
                format!("regularity_alpha{}", row.alpha),
                "K",
                "E sup |I|_H^{-a,p}",
            );
            for (k, e) in report.modes.iter().zip(&row.estimates) {
                p.push(*k as f64, e);
            }
            p
        })
        .collect();
    Ok((report.rows(), plots))
}

/// Computes every output of `cfg` in memory. Pure in `cfg`: the same
/// config always gives the same bytes.
pub fn execute(
    cfg: &RunConfig,
    exec: Execution,
) -> Result<(Vec<Artifact>, Option<SelftestReport>)> {
    cfg.validate()?;
    let hash = cfg.hash();
    let mut selftest = None;
    let (rows, plots, mut extra) = match cfg.command {
        Command::Simulate => simulate(cfg, exec)?,
        Command::Maxineq => with_no_extra(maxineq(cfg, exec)?),
        Command::FactorCheck => with_no_extra(factor_check(cfg, exec)?),
        Command::Critical => with_no_extra(critical(cfg, exec)?),
        Command::Regularity => with_no_extra(regularity(cfg, exec)?),
        Command::Selftest => {
            let report = run_selftest();
            let rows = report.rows();
            selftest = Some(report);
            (rows, Vec::new(), Vec::new())
        }
    };
    let mut out = vec![Artifact {
        name: REPORT_FILE.into(),
        bytes: render_rows(&rows, cfg.seed, &hash),
    }];
    for p in &plots {
        out.extend(p.artifacts());
    }
    out.append(&mut extra);
    Ok((out, selftest))
}

fn with_no_extra(
    (rows, plots): (Vec<ReportRow>, Vec<Plot>),
) -> (Vec<ReportRow>, Vec<Plot>, Vec<Artifact>) {
    (rows, plots, Vec::new())
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// A fresh `run-<secs>-<nanos>` directory below `root`.
fn fresh_run_dir(root: &Path) -> Result<PathBuf> {
    fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
    loop {
        let now = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .unwrap_or_default();
        let dir = root.join(format!("run-{}-{:09}", now.as_secs(), now.subsec_nanos()));
        match fs::create_dir(&dir) {
            Ok(()) => return Ok(dir),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(Error::io(dir, e)),
        }
    }
}

/// Validates, computes, then writes the outputs, the effective config and
/// the manifest into a new directory below `out_root`.
pub fn run(cfg: &RunConfig, out_root: &Path, exec: Execution) -> Result<RunOutput> {
    cfg.validate()?;
    info!("running {} with seed {}", cfg.command.name(), cfg.seed);
    let (artifacts, selftest) = execute(cfg, exec)?;
    let dir = fresh_run_dir(out_root)?;
    let mut files = Vec::new();
    for a in &artifacts {
        write_file(&dir.join(&a.name), &a.bytes)?;
        files.push(FileEntry {
            name: a.name.clone(),
            sha256: hex_digest(&a.bytes),
            bytes: a.bytes.len() as u64,
        });
    }
    write_file(&dir.join(CONFIG_FILE), cfg.to_toml().as_bytes())?;
    let manifest = Manifest {
        command: cfg.command.name().into(),
        seed: cfg.seed,
        config_hash: cfg.hash(),
        config_file: CONFIG_FILE.into(),
        code_version: env!("CARGO_PKG_VERSION").into(),
        files,
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write_file(&dir.join(MANIFEST_FILE), json.as_bytes())?;
    info!(
        "wrote {} files to {}",
        manifest.files.len() + 2,
        dir.display()
    );
    Ok(RunOutput {
        dir,
        manifest,
        selftest,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum FileStatus {
    Identical,
    Missing,
    /// Present in the rerun but not listed in the manifest.
    Unexpected,
    Differs {
        /// Data rows (header excluded) of the recorded and the rerun file.
        row_counts: (usize, usize),
        /// Rows present in both files that differ.
        differing_rows: usize,
        /// Header names of the columns in which those rows differ.
        columns: Vec<String>,
        first_differing_line: Option<usize>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FileDiff {
    pub name: String,
    #[serde(flatten)]
    pub status: FileStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplayReport {
    pub dir: PathBuf,
    /// The config beside the manifest no longer hashes to the recorded value.
    pub config_changed: bool,
    pub files: Vec<FileDiff>,
}

impl ReplayReport {
    pub fn identical(&self) -> bool {
        !self.config_changed && self.files.iter().all(|f| f.status == FileStatus::Identical)
    }
}

fn split_fields(line: &str, csv: bool) -> Vec<&str> {
    if csv {
        line.split(',').collect()
    } else {
        line.split_whitespace().collect()
    }
}

/// Line and column localization of the differences between two text tables.
pub fn diff_tables(name: &str, old: &[u8], new: &[u8]) -> FileStatus {
    if old == new {
        return FileStatus::Identical;
    }
    let old = String::from_utf8_lossy(old);
    let new = String::from_utf8_lossy(new);
    let a: Vec<&str> = old.lines().collect();
    let b: Vec<&str> = new.lines().collect();
    let csv = name.ends_with(".csv");
    let header: Vec<String> = a
        .first()
        .map(|h| {
            let h = h.trim_start_matches('#').trim();
            split_fields(h, csv).into_iter().map(String::from).collect()
        })
        .unwrap_or_default();
    let mut columns: Vec<String> = Vec::new();
    let mut differing_rows = 0;
    let mut first = None;
    for (i, (x, y)) in a.iter().zip(&b).enumerate() {
        if x == y {
            continue;
        }
        first.get_or_insert(i + 1);
        if i == 0 {
            continue;
        }
        differing_rows += 1;
        let (fx, fy) = (split_fields(x, csv), split_fields(y, csv));
        for c in 0..fx.len().max(fy.len()) {
            if fx.get(c) != fy.get(c) {
                let label = header
                    .get(c)
                    .cloned()
                    .unwrap_or_else(|| format!("column{}", c + 1));
                if !columns.contains(&label) {
                    columns.push(label);
                }
            }
        }
    }
    if first.is_none() {
        first = Some(a.len().min(b.len()) + 1);
    }
    FileStatus::Differs {
        row_counts: (a.len().saturating_sub(1), b.len().saturating_sub(1)),
        differing_rows,
        columns,
        first_differing_line: first,
    }
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        context: path.display().to_string(),
        message: e.to_string(),
    })
}

/// Re-executes the config recorded beside `manifest_path` and compares every
/// output byte-wise with the files on disk.
pub fn replay(manifest_path: &Path, exec: Execution) -> Result<ReplayReport> {
    let manifest = read_manifest(manifest_path)?;
    let dir = manifest_path
        .parent()
        .unwrap_or(Path::new("."))
        .to_path_buf();
    let cfg = RunConfig::load(&dir.join(&manifest.config_file))?;
    let config_changed = cfg.hash() != manifest.config_hash;
    let (artifacts, _) = execute(&cfg, exec)?;
    let mut files = Vec::new();
    for entry in &manifest.files {
        let path = dir.join(&entry.name);
        let status = match (
            fs::read(&path),
            artifacts.iter().find(|a| a.name == entry.name),
        ) {
            (Err(_), _) | (_, None) => FileStatus::Missing,
            (Ok(old), Some(new)) => diff_tables(&entry.name, &old, &new.bytes),
        };
        files.push(FileDiff {
            name: entry.name.clone(),
            status,
        });
    }
    for a in &artifacts {
        if !manifest.files.iter().any(|f| f.name == a.name) {
            files.push(FileDiff {
                name: a.name.clone(),
                status: FileStatus::Unexpected,
            });
        }
    }
    Ok(ReplayReport {
        dir,
        config_changed,
        files,
    })
}
