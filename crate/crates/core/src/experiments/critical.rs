use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::mild_solver::{
    euler_solve_critical, growth_constants, Nemytskii, ProblemSpec, SolveConfig, Trajectory,
};
use crate::noise::NoiseDriver;
use crate::spectral::{Multiplier, SpectralField, TorusGrid};
use crate::stoch_conv::{drift_conv, PathOfFields};

use super::frac::frac_time_sobolev;
use super::stats::{BandCheck, Estimate};

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalParams {
    /// `delta1` is replaced by each entry of `deltas`.
    pub spec: ProblemSpec,
    pub deltas: Vec<f64>,
    pub grid: TorusGrid,
    pub dt: f64,
    pub n_samples: u64,
    pub seed: u64,
    /// Time regularity of the `W^{α,2}([0,T], H^{−1})` norm.
    pub alpha_time: f64,
    pub growth_samples: usize,
    /// Acceptable `max/min` across the δ-grid.
    pub band: f64,
}

/// Statistics of the family `u^δ` as `δ₁ → 1`, all driven by the same
/// increments per sample index.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalReport {
    pub deltas: Vec<f64>,
    pub mu: f64,
    pub c_w12: f64,
    pub mu_threshold: f64,
    /// `μ² < 2/Ĉ_w12`; when false no uniform bound is certified.
    pub bound_applicable: bool,
    /// `(E‖u₀‖² + Ĉ μ² T)/(2 − Ĉ μ²)` when applicable.
    pub h1_bound: Option<f64>,
    pub times: Vec<f64>,
    /// `E‖u^δ(t)‖²_{L²}` per δ and time.
    pub l2_series: Vec<Vec<Estimate>>,
    /// `E∫₀ᵀ ‖u^δ‖²_{W^{1,2}} dt` (trapezoid) per δ.
    pub h1_integral: Vec<Estimate>,
    /// `E‖u^δ‖²_{W^{α,2}([0,T], H^{−1})}` per δ.
    pub frac_norm: Vec<Estimate>,
    /// `E‖u^{δ_{i+1}} − u^{δ_i}‖_{L²([0,T]×𝕋)}`, diagnostic only.
    pub coupled_distances: Vec<Estimate>,
    pub h1_band: BandCheck,
    pub frac_band: BandCheck,
    pub alpha_time: f64,
    pub n_samples: u64,
    pub seed: u64,
}

impl CriticalReport {
    /// Uniformity holds and the premise of the energy bound is met.
    pub fn certified(&self) -> bool {
        self.bound_applicable
            && self.h1_band.within_band
            && !self.h1_band.increasing_trend
            && self.frac_band.within_band
            && !self.frac_band.increasing_trend
    }
}

fn check_deltas(deltas: &[f64]) -> Result<()> {
    if deltas.len() < 2 {
        return Err(Error::invalid(
            "deltas",
            "at least two δ levels are required",
        ));
    }
    if deltas.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid(
            "deltas",
            "δ-grid must be strictly increasing",
        ));
    }
    if !(deltas[0] >= 0.0) || !(deltas[deltas.len() - 1] < 1.0) {
        return Err(Error::invalid("deltas", "δ-grid must lie in [0, 1)"));
    }
    Ok(())
}

fn h1_time_integral(path: &PathOfFields) -> f64 {
    let grid = path.grid();
    let w: Vec<f64> = grid
        .plancherel_weights()
        .iter()
        .zip(grid.lambdas())
        .map(|(a, l)| a * l)
        .collect();
    let vals: Vec<f64> = path
        .fields()
        .map(|f| {
            f.coeffs()
                .iter()
                .zip(&w)
                .map(|(c, x)| x * c.norm_sqr())
                .sum()
        })
        .collect();
    let n = vals.len();
    let inner: f64 = vals.iter().sum::<f64>() - 0.5 * (vals[0] + vals[n - 1]);
    inner * path.dt()
}

struct SampleStats {
    l2: Vec<Vec<f64>>,
    h1: Vec<f64>,
    frac: Vec<f64>,
    dist: Vec<f64>,
}

pub fn critical_sweep(params: &CriticalParams, exec: Execution) -> Result<CriticalReport> {
    check_deltas(&params.deltas)?;
    let spec_at = |delta: f64| ProblemSpec {
        delta1: delta,
        ..params.spec.clone()
    };
    let specs: Vec<ProblemSpec> = params.deltas.iter().map(|d| spec_at(*d)).collect();
    let cfg = SolveConfig::new(params.grid, params.dt);
    let mut n_steps = 0;
    for s in &specs {
        s.validate_critical()?;
        n_steps = cfg.validate_discretization(s)?;
    }
    let gc = growth_constants(
        &specs[0],
        params.grid,
        params.growth_samples,
        params.seed,
        0,
    )?;
    let mu = params.spec.mu;
    let c = gc.w12 * mu * mu;
    let driver = NoiseDriver::new(params.seed, params.spec.noise_dim())?;

    let samples = exec.try_map(params.n_samples, |i| -> Result<SampleStats> {
        let incs = driver.sample_increments(i, n_steps, params.dt)?;
        let mut out = SampleStats {
            l2: Vec::new(),
            h1: Vec::new(),
            frac: Vec::new(),
            dist: Vec::new(),
        };
        let mut prev: Option<PathOfFields> = None;
        for s in &specs {
            let path = euler_solve_critical(s, &cfg, &incs)?.path;
            out.l2
                .push(path.fields().map(SpectralField::l2_norm_sq).collect());
            out.h1.push(h1_time_integral(&path));
            out.frac
                .push(frac_time_sobolev(&path, params.alpha_time)?.total());
            if let Some(p) = &prev {
                out.dist.push(path.sub(p)?.l2_space_time_sq().sqrt());
            }
            prev = Some(path);
        }
        Ok(out)
    })?;

    let est = |f: &dyn Fn(&SampleStats) -> f64| -> Result<Estimate> {
        let xs: Vec<f64> = samples.iter().map(f).collect();
        Estimate::from_samples(&xs)
    };
    let nd = params.deltas.len();
    let mut l2_series = Vec::with_capacity(nd);
    let mut h1_integral = Vec::with_capacity(nd);
    let mut frac_norm = Vec::with_capacity(nd);
    let mut coupled_distances = Vec::with_capacity(nd - 1);
    for d in 0..nd {
        l2_series.push(
            (0..=n_steps)
                .map(|n| est(&|s| s.l2[d][n]))
                .collect::<Result<Vec<_>>>()?,
        );
        h1_integral.push(est(&|s| s.h1[d])?);
        frac_norm.push(est(&|s| s.frac[d])?);
        if d + 1 < nd {
            coupled_distances.push(est(&|s| s.dist[d])?);
        }
    }
    let e0 = l2_series[0][0].mean;
    let bound_applicable = c < 2.0;
    Ok(CriticalReport {
        h1_band: BandCheck::new(params.deltas.clone(), h1_integral.clone(), params.band)?,
        frac_band: BandCheck::new(params.deltas.clone(), frac_norm.clone(), params.band)?,
        deltas: params.deltas.clone(),
        mu,
        c_w12: gc.w12,
        mu_threshold: gc.mu_threshold(),
        bound_applicable,
        h1_bound: bound_applicable.then(|| (e0 + c * params.spec.horizon) / (2.0 - c)),
        times: (0..=n_steps).map(|n| n as f64 * params.dt).collect(),
        l2_series,
        h1_integral,
        frac_norm,
        coupled_distances,
        alpha_time: params.alpha_time,
        n_samples: params.n_samples,
        seed: params.seed,
    })
}

/// Time-fractional norms of a solution and of its three mild parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FracParts {
    /// `t ↦ S_t u₀`
    pub initial: f64,
    /// `t ↦ ∫₀ᵗ (−Δ+1)^{δ₀} S_{t−s} F(u_s) ds`
    pub drift: f64,
    /// Remainder `u − initial − drift`, the stochastic convolution.
    pub stochastic: f64,
    pub total: f64,
}

/// Splits `traj` into its mild parts and applies [`frac_time_sobolev`] to each.
pub fn frac_decomposition(spec: &ProblemSpec, traj: &Trajectory, alpha: f64) -> Result<FracParts> {
    let path = &traj.path;
    let grid = *path.grid();
    let dt = path.dt();
    let u0 = path.at(0);
    let initial = PathOfFields::from_fields(
        dt,
        (0..path.len())
            .map(|n| Multiplier::semigroup(grid, n as f64 * dt)?.apply(u0))
            .collect::<Result<Vec<_>>>()?,
    )?;
    let nem = Nemytskii::new(spec, grid)?;
    let f_path = PathOfFields::from_fields(
        dt,
        path.fields()
            .map(|u| nem.drift(u))
            .collect::<Result<Vec<_>>>()?,
    )?;
    let drift = drift_conv(&f_path, spec.delta0)?;
    let stochastic = path.sub(&initial)?.sub(&drift)?;
    Ok(FracParts {
        initial: frac_time_sobolev(&initial, alpha)?.total(),
        drift: frac_time_sobolev(&drift, alpha)?.total(),
        stochastic: frac_time_sobolev(&stochastic, alpha)?.total(),
        total: frac_time_sobolev(path, alpha)?.total(),
    })
}

/// Per-δ table of the time-fractional norms and their mild parts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct APriori2Table {
    pub deltas: Vec<f64>,
    pub alpha: f64,
    pub initial: Vec<Estimate>,
    pub drift: Vec<Estimate>,
    pub stochastic: Vec<Estimate>,
    pub total: Vec<Estimate>,
    pub band: BandCheck,
}

/// Recomputes the first `n_samples` coupled solves of `params` and tabulates
/// [`frac_decomposition`] per δ, with a band and trend test on the totals.
pub fn a_priori_2_check(
    params: &CriticalParams,
    n_samples: u64,
    exec: Execution,
) -> Result<APriori2Table> {
    check_deltas(&params.deltas)?;
    let cfg = SolveConfig::new(params.grid, params.dt);
    let specs: Vec<ProblemSpec> = params
        .deltas
        .iter()
        .map(|d| ProblemSpec {
            delta1: *d,
            ..params.spec.clone()
        })
        .collect();
    let n_steps = cfg.validate_discretization(&specs[0])?;
    let driver = NoiseDriver::new(params.seed, params.spec.noise_dim())?;
    let rows = exec.try_map(n_samples, |i| -> Result<Vec<FracParts>> {
        let incs = driver.sample_increments(i, n_steps, params.dt)?;
        specs
            .iter()
            .map(|s| {
                frac_decomposition(s, &euler_solve_critical(s, &cfg, &incs)?, params.alpha_time)
            })
            .collect()
    })?;
    let col = |d: usize, pick: fn(&FracParts) -> f64| {
        Estimate::from_samples(&rows.iter().map(|r| pick(&r[d])).collect::<Vec<_>>())
    };
    let nd = specs.len();
    let (mut initial, mut drift, mut stochastic, mut total) =
        (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for d in 0..nd {
        initial.push(col(d, |p| p.initial)?);
        drift.push(col(d, |p| p.drift)?);
        stochastic.push(col(d, |p| p.stochastic)?);
        total.push(col(d, |p| p.total)?);
    }
    Ok(APriori2Table {
        band: BandCheck::new(params.deltas.clone(), total.clone(), params.band)?,
        deltas: params.deltas.clone(),
        alpha: params.alpha_time,
        initial,
        drift,
        stochastic,
        total,
    })
}
