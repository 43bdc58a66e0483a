use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::experiments::{
    check_moment_hypothesis, CriticalParams, MaxIneqParams, RegularityParams,
};
use crate::mild_solver::{
    Diffusion, InitialCondition, ProblemSpec, Profile, ScalarFn, SolveConfig,
};
use crate::spectral::TorusGrid;
use crate::stoch_conv::{FactorizationConfig, QuadratureRule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Simulate,
    Maxineq,
    FactorCheck,
    Critical,
    Regularity,
    Selftest,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Maxineq => "maxineq",
            Command::FactorCheck => "factor-check",
            Command::Critical => "critical",
            Command::Regularity => "regularity",
            Command::Selftest => "selftest",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Picard,
    Euler,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiffusionKind {
    Pointwise,
    Additive,
    Divergence,
}

/// Flat run configuration. Every key is optional; see [`RunConfig::default`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    pub seed: u64,
    pub output_dir: String,

    pub dim: usize,
    pub modes: usize,
    pub points: usize,

    pub delta0: f64,
    pub delta1: f64,
    pub mu: f64,
    pub horizon: f64,
    pub drift: String,
    pub drift_coeffs: Vec<f64>,
    pub diffusion_kind: DiffusionKind,
    /// Catalog names, one per noise component (pointwise) or per spatial
    /// axis (divergence).
    pub diffusion: Vec<String>,
    pub diffusion_coeffs: Vec<Vec<f64>>,
    /// Additive profile: `constant`, `cosine` or `decaying`.
    pub profile: String,
    pub profile_value: f64,
    pub profile_exponent: f64,
    pub noise_dim: usize,
    /// `benchmark`, `constant` or `random`.
    pub u0: String,
    pub u0_value: f64,
    pub u0_seed: u64,
    pub u0_decay: f64,
    pub u0_amplitude: f64,

    pub dt: f64,
    pub scheme: Scheme,
    pub picard_tol: f64,
    pub picard_max_iters: usize,
    pub split_depth: u32,
    pub q: f64,
    pub p: f64,
    pub m: u32,
    pub blowup_cap: f64,
    pub alpha: f64,
    pub quadrature: QuadratureRule,

    pub n_samples: u64,
    pub horizons: Vec<f64>,
    pub deltas: Vec<f64>,
    pub alpha_time: f64,
    pub band: f64,
    pub growth_samples: usize,
    pub decompose_samples: u64,
    pub alphas: Vec<f64>,
    pub regularity_delta: f64,
    pub regularity_modes: Vec<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            command: Command::Simulate,
            seed: 1,
            output_dir: "runs".into(),
            dim: 1,
            modes: 32,
            points: 64,
            delta0: 0.3,
            delta1: 0.3,
            mu: 0.5,
            horizon: 0.25,
            drift: "sin".into(),
            drift_coeffs: Vec::new(),
            diffusion_kind: DiffusionKind::Pointwise,
            diffusion: vec!["cos".into()],
            diffusion_coeffs: Vec::new(),
            profile: "constant".into(),
            profile_value: 1.0,
            profile_exponent: 0.5,
            noise_dim: 1,
            u0: "benchmark".into(),
            u0_value: 0.0,
            u0_seed: 7,
            u0_decay: 1.0,
            u0_amplitude: 1.0,
            dt: 1e-3,
            scheme: Scheme::Picard,
            picard_tol: 1e-8,
            picard_max_iters: 50,
            split_depth: 4,
            q: 8.0,
            p: 2.0,
            m: 1,
            blowup_cap: 1e8,
            alpha: FactorizationConfig::DEFAULT_ALPHA,
            quadrature: QuadratureRule::default(),
            n_samples: 16,
            horizons: vec![0.015625, 0.03125, 0.0625, 0.125, 0.25, 0.5],
            deltas: vec![0.5, 0.7, 0.9, 0.95, 0.99],
            alpha_time: 0.25,
            band: 2.0,
            growth_samples: 128,
            decompose_samples: 8,
            alphas: vec![0.2, -0.2],
            regularity_delta: 1.0,
            regularity_modes: vec![32, 64],
        }
    }
}

fn cfg_err(field: &str, message: impl Into<String>) -> Error {
    Error::Config {
        field: field.to_string(),
        message: message.into(),
    }
}

/// Re-labels argument errors with the config key that produced them.
fn in_field<T>(field: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::InvalidArgument { reason, .. } => cfg_err(field, reason),
        other => other,
    })
}

// Key of the `key = value` line holding byte `pos`.
fn key_at(text: &str, pos: usize) -> Option<String> {
    let start = text[..pos.min(text.len())].rfind('\n').map_or(0, |i| i + 1);
    let line = text[start..].lines().next()?;
    let key = line.split('=').next()?.trim();
    let ok = !key.is_empty() && key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
    (ok && line.contains('=')).then(|| key.to_string())
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| match e.span().and_then(|s| key_at(text, s.start)) {
            Some(field) => cfg_err(&field, e.message().to_string()),
            None => Error::Parse {
                context: "run config".into(),
                message: e.to_string(),
            },
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    /// Canonical TOML rendering; parsing it back gives the same config.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config is always representable as TOML")
    }

    /// sha256 of the canonical rendering with `output_dir` cleared, hex
    /// encoded. Where results are written does not change what they are.
    pub fn hash(&self) -> String {
        let key = RunConfig {
            output_dir: String::new(),
            ..self.clone()
        };
        hex_digest(key.to_toml().as_bytes())
    }

    pub fn grid(&self) -> Result<TorusGrid> {
        in_field("modes", TorusGrid::new(self.dim, self.modes, self.points))
    }

    fn scalar_fn(&self, field: &str, name: &str, coeffs: &[f64]) -> Result<ScalarFn> {
        ScalarFn::from_catalog(name, coeffs).map_err(|e| match e {
            Error::Config { message, .. } => cfg_err(field, message),
            other => other,
        })
    }

    fn profile(&self) -> Result<Profile> {
        match self.profile.as_str() {
            "constant" => Ok(Profile::Constant(self.profile_value)),
            "cosine" => Ok(Profile::Cosine),
            "decaying" => Ok(Profile::Decaying {
                exponent: self.profile_exponent,
            }),
            other => Err(cfg_err(
                "profile",
                format!("unknown profile `{other}` (expected constant, cosine or decaying)"),
            )),
        }
    }

    pub fn problem(&self) -> Result<ProblemSpec> {
        let coeffs = |i: usize| self.diffusion_coeffs.get(i).cloned().unwrap_or_default();
        let diffusion = match self.diffusion_kind {
            DiffusionKind::Pointwise => self
                .diffusion
                .iter()
                .enumerate()
                .map(|(i, n)| {
                    Ok(Diffusion::Pointwise(self.scalar_fn(
                        "diffusion",
                        n,
                        &coeffs(i),
                    )?))
                })
                .collect::<Result<Vec<_>>>()?,
            DiffusionKind::Additive => {
                if self.noise_dim == 0 {
                    return Err(cfg_err("noise_dim", "must be at least 1"));
                }
                vec![Diffusion::Additive(self.profile()?); self.noise_dim]
            }
            DiffusionKind::Divergence => {
                if self.diffusion.len() != self.dim {
                    return Err(cfg_err(
                        "diffusion",
                        format!(
                            "divergence noise needs one function per axis ({}), got {}",
                            self.dim,
                            self.diffusion.len()
                        ),
                    ));
                }
                let gs = self
                    .diffusion
                    .iter()
                    .enumerate()
                    .map(|(i, n)| self.scalar_fn("diffusion", n, &coeffs(i)))
                    .collect::<Result<Vec<_>>>()?;
                vec![Diffusion::Divergence(gs)]
            }
        };
        let u0 = match self.u0.as_str() {
            "benchmark" => InitialCondition::Benchmark,
            "constant" => InitialCondition::Constant(self.u0_value),
            "random" => InitialCondition::RandomField {
                seed: self.u0_seed,
                decay: self.u0_decay,
                amplitude: self.u0_amplitude,
            },
            other => {
                let msg = format!("unknown initial condition `{other}`");
                return Err(cfg_err(
                    "u0",
                    msg + " (expected benchmark, constant or random)",
                ));
            }
        };
        Ok(ProblemSpec {
            delta0: self.delta0,
            delta1: self.delta1,
            mu: self.mu,
            drift: self.scalar_fn("drift", &self.drift, &self.drift_coeffs)?,
            diffusion,
            u0,
            horizon: self.horizon,
        })
    }

    pub fn solve_config(&self) -> Result<SolveConfig> {
        let mut cfg = SolveConfig::new(self.grid()?, self.dt);
        cfg.picard_tol = self.picard_tol;
        cfg.picard_max_iters = self.picard_max_iters;
        cfg.q = self.q;
        cfg.p = self.p;
        cfg.m = self.m;
        cfg.blowup_cap = self.blowup_cap;
        cfg.factorization = in_field(
            "alpha",
            FactorizationConfig::new(self.alpha, self.delta1, self.quadrature),
        )?;
        Ok(cfg)
    }

    pub fn maxineq_params(&self) -> Result<MaxIneqParams> {
        Ok(MaxIneqParams {
            delta: self.delta1,
            q: self.q,
            horizons: self.horizons.clone(),
            n_samples: self.n_samples,
            profile: self.profile()?,
            grid: self.grid()?,
            dt: self.dt,
            seed: self.seed,
        })
    }

    pub fn critical_params(&self) -> Result<CriticalParams> {
        Ok(CriticalParams {
            spec: self.problem()?,
            deltas: self.deltas.clone(),
            grid: self.grid()?,
            dt: self.dt,
            n_samples: self.n_samples,
            seed: self.seed,
            alpha_time: self.alpha_time,
            growth_samples: self.growth_samples,
            band: self.band,
        })
    }

    pub fn regularity_params(&self) -> Result<RegularityParams> {
        Ok(RegularityParams {
            delta: self.regularity_delta,
            alphas: self.alphas.clone(),
            p: self.p,
            profile: self.profile()?,
            dim: self.dim,
            modes: self.regularity_modes.clone(),
            dt: self.dt,
            horizon: self.horizon,
            n_samples: self.n_samples,
            seed: self.seed,
        })
    }

    /// Checks the preconditions of the selected command before any compute.
    pub fn validate(&self) -> Result<()> {
        if self.command == Command::Selftest {
            return Ok(());
        }
        if self.n_samples < 2 {
            return Err(cfg_err("n_samples", "at least two samples are required"));
        }
        self.grid()?;
        let needs_dt_division = |t: f64, field: &str| -> Result<()> {
            let n = (t / self.dt).round();
            if !(self.dt > 0.0) || n < 1.0 || (n * self.dt - t).abs() > 1e-9 * t.max(1.0) {
                return Err(cfg_err(
                    field,
                    format!("dt = {} does not divide {t}", self.dt),
                ));
            }
            Ok(())
        };
        match self.command {
            Command::Simulate => {
                let spec = self.problem()?;
                let cfg = self.solve_config()?;
                match self.scheme {
                    Scheme::Picard => {
                        spec.validate().map_err(relabel)?;
                        cfg.validate(&spec).map_err(relabel)?;
                    }
                    Scheme::Euler => {
                        spec.validate_critical().map_err(relabel)?;
                        cfg.validate_discretization(&spec).map_err(relabel)?;
                    }
                }
            }
            Command::Maxineq => {
                check_moment_hypothesis(self.q, self.delta1).map_err(|e| match e {
                    Error::InvalidArgument { reason, .. } => cfg_err("delta1", reason),
                    other => other,
                })?;
                if self.horizons.len() < 4 {
                    return Err(cfg_err("horizons", "at least four horizons are required"));
                }
                for t in &self.horizons {
                    needs_dt_division(*t, "horizons")?;
                }
                self.profile()?;
            }
            Command::FactorCheck => {
                self.profile()?;
                self.solve_config()?;
                needs_dt_division(self.horizon, "horizon")?;
                if !(0.0..1.0).contains(&self.delta1) {
                    return Err(cfg_err("delta1", "must lie in [0, 1)"));
                }
            }
            Command::Critical => {
                let spec = self.problem()?;
                spec.validate_critical().map_err(relabel)?;
                if self.deltas.len() < 2 || self.deltas.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(cfg_err(
                        "deltas",
                        "must hold at least two strictly increasing values",
                    ));
                }
                if !(self.deltas[0] >= 0.0 && *self.deltas.last().unwrap() < 1.0) {
                    return Err(cfg_err("deltas", "values must lie in [0, 1)"));
                }
                if !(self.alpha_time > 0.0 && self.alpha_time < 0.5) {
                    return Err(cfg_err("alpha_time", "must lie in (0, 1/2)"));
                }
                if self.p != 2.0 {
                    return Err(cfg_err("p", "the critical sweep works in L², set p = 2"));
                }
                needs_dt_division(self.horizon, "horizon")?;
            }
            Command::Regularity => {
                self.profile()?;
                if self.alphas.is_empty() {
                    return Err(cfg_err("alphas", "at least one α is required"));
                }
                if self.regularity_modes.is_empty() {
                    return Err(cfg_err(
                        "regularity_modes",
                        "at least one mode count is required",
                    ));
                }
                for k in &self.regularity_modes {
                    in_field("regularity_modes", TorusGrid::new(self.dim, *k, 2 * k))?;
                }
                needs_dt_division(self.horizon, "horizon")?;
            }
            Command::Selftest => {}
        }
        Ok(())
    }
}

/// Maps argument errors raised by the solver layer onto config fields.
fn relabel(e: Error) -> Error {
    match e {
        Error::InvalidArgument { name, reason } => cfg_err(name, reason),
        other => other,
    }
}

pub fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}
