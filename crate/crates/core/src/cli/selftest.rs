use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::Result;
use crate::exec::Execution;
use crate::experiments::{
    frac_time_sobolev, maxineq_scaling, mc_sup_moment, MaxIneqParams, ReportRow,
};
use crate::mild_solver::{
    euler_solve, growth_constants, picard_solve, Diffusion, InitialCondition, ProblemSpec, Profile,
    ScalarFn, SolveConfig,
};
use crate::noise::NoiseDriver;
use crate::spectral::{inverse_transform, transform, Multiplier, SpectralField, TorusGrid};
use crate::stoch_conv::{beta_identity, direct_conv, drift_conv, PathOfFields};

use super::config::RunConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct SelftestEntry {
    pub module: &'static str,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelftestReport {
    pub entries: Vec<SelftestEntry>,
}

impl SelftestReport {
    pub fn all_passed(&self) -> bool {
        self.entries.iter().all(|e| e.passed)
    }

    pub fn table(&self) -> String {
        let mut s = format!("{:<12} {:<44} {}\n", "module", "check", "result");
        for e in &self.entries {
            let verdict = if e.passed { "pass" } else { "FAIL" };
            let _ = writeln!(s, "{:<12} {:<44} {verdict}  {}", e.module, e.name, e.detail);
        }
        let n_pass = self.entries.iter().filter(|e| e.passed).count();
        let _ = writeln!(s, "{n_pass}/{} checks passed", self.entries.len());
        s
    }

    pub fn rows(&self) -> Vec<ReportRow> {
        self.entries
            .iter()
            .map(|e| {
                ReportRow::new(
                    "selftest",
                    format!("{}:{}", e.module, e.name),
                    "passed",
                    if e.passed { 1.0 } else { 0.0 },
                )
            })
            .collect()
    }
}

type Check = fn() -> Result<(bool, String)>;

fn grid() -> TorusGrid {
    TorusGrid::new(1, 16, 32).expect("valid grid")
}

fn zero_spec(mu: f64, diffusion: Diffusion) -> ProblemSpec {
    ProblemSpec {
        delta0: 0.0,
        delta1: 0.5,
        mu,
        drift: ScalarFn::Constant(0.0),
        diffusion: vec![diffusion],
        u0: InitialCondition::Benchmark,
        horizon: 0.05,
    }
}

fn constant_transform() -> Result<(bool, String)> {
    let g = grid();
    let f = transform(&g, &vec![2.5; g.n_points()])?;
    let c0 = f.coeff(&[0]).unwrap_or_default();
    let rest: f64 = f.coeffs().iter().map(|c| c.norm()).sum::<f64>() - c0.norm();
    Ok((
        (c0 - Complex64::new(2.5, 0.0)).norm() < 1e-14 && rest < 1e-13,
        format!("c0 = {c0}"),
    ))
}

fn round_trip() -> Result<(bool, String)> {
    let g = grid();
    let f = SpectralField::from_fn(g, |x| (x[0]).sin() + 0.25 * (3.0 * x[0]).cos());
    let back = transform(&g, &inverse_transform(&f))?;
    let err = (&back - &f).l2_norm_sq().sqrt();
    Ok((err < 1e-12, format!("error {err:.1e}")))
}

fn semigroup_at_zero() -> Result<(bool, String)> {
    let g = grid();
    let s = Multiplier::semigroup(g, 0.0)?;
    let p = Multiplier::frac_power(g, 0.0)?;
    let ok = s
        .symbol()
        .iter()
        .chain(p.symbol())
        .all(|c| *c == Complex64::new(1.0, 0.0));
    Ok((ok, String::new()))
}

fn seeded_noise() -> Result<(bool, String)> {
    let a = NoiseDriver::new(9, 2)?.sample_increments(3, 50, 0.01)?;
    let b = NoiseDriver::new(9, 2)?.sample_increments(3, 50, 0.01)?;
    let c = NoiseDriver::new(10, 2)?.sample_increments(3, 50, 0.01)?;
    Ok((a == b && a != c, String::new()))
}

fn zero_integrand() -> Result<(bool, String)> {
    let g = grid();
    let zero = PathOfFields::constant(0.01, 11, &[SpectralField::zeros(g)])?;
    let incs = NoiseDriver::new(1, 1)?.sample_increments(0, 10, 0.01)?;
    let i = direct_conv(&zero, &incs, 0.5)?;
    let d = drift_conv(&zero, 0.5)?;
    let ok = i.fields().chain(d.fields()).all(|f| f.l2_norm_sq() == 0.0);
    Ok((ok, String::new()))
}

fn beta_at_half() -> Result<(bool, String)> {
    let v = beta_identity(0.5, 0.0, 1.0, 64)?;
    Ok(((v - PI).abs() < 1e-10, format!("{v:.12}")))
}

fn heat_flow() -> Result<(bool, String)> {
    let g = grid();
    let spec = zero_spec(1.0, Diffusion::Additive(Profile::Constant(0.0)));
    let cfg = SolveConfig::new(g, 1e-3);
    let incs = NoiseDriver::new(2, 1)?.sample_increments(0, 50, 1e-3)?;
    let p = picard_solve(&spec, &cfg, &incs)?;
    let e = euler_solve(&spec, &cfg, &incs)?;
    let u0 = InitialCondition::Benchmark.realize(g)?;
    let mut err = 0.0f64;
    for (j, (a, b)) in p.states().zip(e.states()).enumerate() {
        let exact = Multiplier::semigroup(g, j as f64 * 1e-3)?.apply(&u0)?;
        err = err
            .max((&exact - a).l2_norm_sq().sqrt())
            .max((&exact - b).l2_norm_sq().sqrt());
    }
    Ok((
        p.picard[0].iterations() == 1 && err < 1e-12,
        format!("error {err:.1e}"),
    ))
}

fn identity_lipschitz() -> Result<(bool, String)> {
    let spec = ProblemSpec {
        drift: ScalarFn::Identity,
        ..zero_spec(0.0, Diffusion::Pointwise(ScalarFn::Constant(1.0)))
    };
    let gc = growth_constants(&spec, grid(), 8, 1, 0)?;
    Ok((
        (gc.lip_f - 1.0).abs() < 1e-10,
        format!("lip_f = {:.12}", gc.lip_f),
    ))
}

fn deterministic_moment() -> Result<(bool, String)> {
    let g = grid();
    let path = PathOfFields::constant(0.1, 3, &[SpectralField::constant(g, 1.0)])?;
    let e = mc_sup_moment(Execution::Sequential, 4, 2.0, 2.0, |_| Ok(path.clone()))?;
    Ok((
        e.se == 0.0 && (e.mean - 2.0 * PI).abs() < 1e-12,
        format!("{:.6}", e.mean),
    ))
}

fn maxineq_gate() -> Result<(bool, String)> {
    let params = |q: f64, b: f64| MaxIneqParams {
        delta: 0.5,
        q,
        horizons: vec![0.125, 0.25, 0.5, 1.0],
        n_samples: 4,
        profile: Profile::Constant(b),
        grid: TorusGrid::new(1, 8, 16).expect("valid grid"),
        dt: 0.0625,
        seed: 1,
    };
    let refused = maxineq_scaling(&params(4.0, 1.0), Execution::Sequential).is_err();
    let zero = maxineq_scaling(&params(8.0, 0.0), Execution::Sequential)?;
    let all_zero = zero.estimates.iter().all(|e| e.mean == 0.0);
    Ok((refused && all_zero, String::new()))
}

fn constant_frac_path() -> Result<(bool, String)> {
    let g = grid();
    let path = PathOfFields::constant(0.01, 20, &[SpectralField::from_fn(g, |x| x[0].cos())])?;
    let n = frac_time_sobolev(&path, 0.3)?;
    Ok((n.seminorm == 0.0, String::new()))
}

fn config_round_trip() -> Result<(bool, String)> {
    let cfg = RunConfig::default();
    let back = RunConfig::from_toml(&cfg.to_toml())?;
    Ok((back == cfg && back.hash() == cfg.hash(), String::new()))
}

const CHECKS: &[(&str, &str, Check)] = &[
    (
        "spectral",
        "constant field has only the zero mode",
        constant_transform,
    ),
    ("spectral", "transform round trip", round_trip),
    (
        "spectral",
        "semigroup and power at zero are identity",
        semigroup_at_zero,
    ),
    ("noise", "increments are fixed by the seed", seeded_noise),
    (
        "stoch_conv",
        "zero integrand gives zero convolutions",
        zero_integrand,
    ),
    ("stoch_conv", "beta identity at alpha = 1/2", beta_at_half),
    (
        "mild_solver",
        "no coefficients gives the heat flow",
        heat_flow,
    ),
    (
        "mild_solver",
        "identity drift is 1-Lipschitz",
        identity_lipschitz,
    ),
    (
        "experiments",
        "deterministic path has zero SE",
        deterministic_moment,
    ),
    ("experiments", "moment gate and zero noise", maxineq_gate),
    (
        "experiments",
        "constant path has zero seminorm",
        constant_frac_path,
    ),
    ("cli", "config round trip keeps the hash", config_round_trip),
];

pub fn run_selftest() -> SelftestReport {
    let entries = CHECKS
        .iter()
        .map(|(module, name, check)| {
            let (passed, detail) = match check() {
                Ok(r) => r,
                Err(e) => (false, e.to_string()),
            };
            SelftestEntry {
                module,
                name,
                passed,
                detail,
            }
        })
        .collect();
    SelftestReport { entries }
}
