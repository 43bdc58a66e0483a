use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::mild_solver::Profile;
use crate::noise::NoiseDriver;
use crate::spectral::TorusGrid;
use crate::stoch_conv::{direct_conv_any_order, PathOfFields};

use super::moments::mc_sup_moment;
use super::stats::Estimate;

#[derive(Debug, Clone, PartialEq)]
pub struct RegularityParams {
    /// Order of the convolution, typically `δ ≥ 1`.
    pub delta: f64,
    pub alphas: Vec<f64>,
    pub p: f64,
    pub profile: Profile,
    pub dim: usize,
    /// Mode counts to compare, e.g. `[K, 2K]`.
    pub modes: Vec<usize>,
    pub dt: f64,
    pub horizon: f64,
    pub n_samples: u64,
    pub seed: u64,
}

/// `E sup_t ‖I(t)‖_{H^{−α,p}}` per `α` and mode count.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularityRow {
    pub alpha: f64,
    /// `α ≤ δ − 1`: no finite limit is expected.
    pub flagged: bool,
    pub estimates: Vec<Estimate>,
    /// Successive ratios `estimate(K_{i+1}) / estimate(K_i)`.
    pub growth: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularityReport {
    pub delta: f64,
    pub p: f64,
    pub modes: Vec<usize>,
    pub rows: Vec<RegularityRow>,
    pub n_samples: u64,
    pub seed: u64,
}

/// `(−Δ+1)^{−α/2}` of the order-`δ` convolution, i.e. the convolution with
/// the smoothed order `δ − α`, so that its `L^p` norm is the `H^{−α,p}` norm.
pub fn smoothed_convolution(
    b_path: &PathOfFields,
    incs: &crate::noise::BrownianIncrements,
    delta: f64,
    alpha: f64,
) -> Result<PathOfFields> {
    direct_conv_any_order(b_path, incs, delta - alpha)
}

pub fn regularity_report(params: &RegularityParams, exec: Execution) -> Result<RegularityReport> {
    if params.alphas.is_empty() || params.modes.is_empty() {
        return Err(Error::invalid(
            "alphas",
            "need at least one α and one mode count",
        ));
    }
    let n = (params.horizon / params.dt).round();
    if !(n >= 1.0) || (n * params.dt - params.horizon).abs() > 1e-9 * params.horizon {
        return Err(Error::invalid("dt", "must divide the horizon"));
    }
    let n = n as usize;
    let driver = NoiseDriver::new(params.seed, 1)?;
    let mut rows = Vec::new();
    for &alpha in &params.alphas {
        let mut estimates = Vec::new();
        for &k in &params.modes {
            let grid = TorusGrid::new(params.dim, k, 2 * k)?;
            let b = params.profile.realize(grid)?;
            let b_path = PathOfFields::constant(params.dt, n + 1, &[b])?;
            estimates.push(mc_sup_moment(exec, params.n_samples, 1.0, params.p, |i| {
                let incs = driver.sample_increments(i, n, params.dt)?;
                smoothed_convolution(&b_path, &incs, params.delta, alpha)
            })?);
        }
        let growth = estimates
            .windows(2)
            .map(|w| {
                if w[0].mean > 0.0 {
                    w[1].mean / w[0].mean
                } else {
                    1.0
                }
            })
            .collect();
        rows.push(RegularityRow {
            alpha,
            flagged: alpha <= params.delta - 1.0,
            estimates,
            growth,
        });
    }
    Ok(RegularityReport {
        delta: params.delta,
        p: params.p,
        modes: params.modes.clone(),
        rows,
        n_samples: params.n_samples,
        seed: params.seed,
    })
}
