//! Command line front end: flat TOML configs, run directories with a CSV
//! report, plot data and a manifest, and byte-wise replay.

mod config;
mod run;
mod selftest;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::error::Error;
use crate::exec::{configure_threads, Execution};

pub use config::{hex_digest, Command, DiffusionKind, RunConfig, Scheme};
pub use run::{
    diff_tables, execute, read_manifest, replay, run, Artifact, FileDiff, FileEntry, FileStatus,
    Manifest, ReplayReport, RunOutput, CONFIG_FILE, MANIFEST_FILE, REPORT_FILE,
};
pub use selftest::{run_selftest, SelftestEntry, SelftestReport};

#[derive(Debug, Parser)]
#[command(
    name = "spde-lab",
    version,
    about = "Spectral experiments for fractional stochastic heat equations"
)]
pub struct Cli {
    /// Worker threads for sample-parallel loops (0 = all cores).
    #[arg(long, global = true, env = "SPDE_LAB_THREADS", default_value_t = 0)]
    pub threads: usize,

    #[command(subcommand)]
    pub action: Action,
}

#[derive(Debug, Subcommand)]
pub enum Action {
    /// Validate a config, run its command and write a run directory.
    Run {
        #[arg(long, env = "SPDE_LAB_CONFIG")]
        config: PathBuf,
        /// Overrides `seed` from the config.
        #[arg(long, env = "SPDE_LAB_SEED")]
        seed: Option<u64>,
        /// Overrides `output_dir` from the config.
        #[arg(long, env = "SPDE_LAB_OUT")]
        out: Option<PathBuf>,
    },
    /// Re-execute a run from its manifest and compare outputs byte-wise.
    Replay { manifest: PathBuf },
    /// Run the built-in quick checks and print a pass/fail table.
    Selftest,
}

fn report_error(e: &Error) -> i32 {
    let field = match e {
        Error::Config { field, .. } => Some(field.clone()),
        Error::InvalidArgument { name, .. } => Some(name.to_string()),
        _ => None,
    };
    let msg = serde_json::json!({
        "error": e.kind(),
        "field": field,
        "message": e.to_string(),
    });
    eprintln!("{msg}");
    e.exit_code()
}

/// Runs the parsed command line and returns the process exit status.
pub fn main_with(cli: Cli) -> i32 {
    configure_threads(cli.threads);
    let exec = Execution::default();
    match cli.action {
        Action::Run { config, seed, out } => {
            let mut cfg = match RunConfig::load(&config) {
                Ok(c) => c,
                Err(e) => return report_error(&e),
            };
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(o) = out {
                cfg.output_dir = o.display().to_string();
            }
            let root = PathBuf::from(&cfg.output_dir);
            match run(&cfg, &root, exec) {
                Ok(out) => {
                    if let Some(st) = &out.selftest {
                        print!("{}", st.table());
                    }
                    println!("{}", out.dir.display());
                    match &out.selftest {
                        Some(st) if !st.all_passed() => 3,
                        _ => 0,
                    }
                }
                Err(e) => report_error(&e),
            }
        }
        Action::Replay { manifest } => match replay(&manifest, exec) {
            Ok(r) => {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&r).expect("report serializes")
                );
                if r.identical() {
                    0
                } else {
                    4
                }
            }
            Err(e) => report_error(&e),
        },
        Action::Selftest => {
            let st = run_selftest();
            print!("{}", st.table());
            if st.all_passed() {
                0
            } else {
                3
            }
        }
    }
}

#[cfg(test)]
mod tests;
