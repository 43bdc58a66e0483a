use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::mild_solver::Profile;
use crate::noise::NoiseDriver;
use crate::spectral::{norm_lp, TorusGrid};
use crate::stoch_conv::{direct_conv, PathOfFields};

use super::stats::{fit_line, Estimate, LineFit};

fn path_norms(path: &PathOfFields, p: f64) -> Result<Vec<f64>> {
    path.fields()
        .map(|f| {
            if p == 2.0 {
                Ok(f.l2_norm_sq().sqrt())
            } else {
                norm_lp(f, p)
            }
        })
        .collect()
}

/// `E[(max_n ‖u(t_n)‖_{L^p})^q]` over `n_samples` paths, sample `i` produced
/// by `factory(i)`.
pub fn mc_sup_moment<F>(
    exec: Execution,
    n_samples: u64,
    q: f64,
    p: f64,
    factory: F,
) -> Result<Estimate>
where
    F: Fn(u64) -> Result<PathOfFields> + Sync + Send,
{
    let prefix = usize::MAX;
    Ok(mc_sup_moments(exec, n_samples, q, p, &[prefix], factory)?[0])
}

/// Like [`mc_sup_moment`] for several horizons read off one path: entry `h`
/// of the result uses the time points `0 ..= prefixes[h]` (clamped to the
/// path length).
pub fn mc_sup_moments<F>(
    exec: Execution,
    n_samples: u64,
    q: f64,
    p: f64,
    prefixes: &[usize],
    factory: F,
) -> Result<Vec<Estimate>>
where
    F: Fn(u64) -> Result<PathOfFields> + Sync + Send,
{
    let per_sample = sup_moment_samples(exec, n_samples, q, p, prefixes, factory)?;
    column_estimates(&per_sample, prefixes.len(), |_| true)
}

fn sup_moment_samples<F>(
    exec: Execution,
    n_samples: u64,
    q: f64,
    p: f64,
    prefixes: &[usize],
    factory: F,
) -> Result<Vec<Vec<f64>>>
where
    F: Fn(u64) -> Result<PathOfFields> + Sync + Send,
{
    if n_samples < 2 {
        return Err(Error::invalid(
            "n_samples",
            "at least two samples are required",
        ));
    }
    if !(q >= 1.0) {
        return Err(Error::invalid("q", format!("{q} must be at least 1")));
    }
    exec.try_map(n_samples, |i| -> Result<Vec<f64>> {
        let norms = path_norms(&factory(i)?, p)?;
        Ok(prefixes
            .iter()
            .map(|&n| {
                let end = n.min(norms.len() - 1);
                norms[..=end].iter().cloned().fold(0.0, f64::max).powf(q)
            })
            .collect())
    })
}

fn column_estimates(
    per_sample: &[Vec<f64>],
    width: usize,
    keep: impl Fn(usize) -> bool,
) -> Result<Vec<Estimate>> {
    (0..width)
        .map(|h| {
            let col: Vec<f64> = per_sample
                .iter()
                .enumerate()
                .filter(|(i, _)| keep(*i))
                .map(|(_, r)| r[h])
                .collect();
            Estimate::from_samples(&col)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaxIneqParams {
    pub delta: f64,
    pub q: f64,
    pub horizons: Vec<f64>,
    pub n_samples: u64,
    pub profile: Profile,
    pub grid: TorusGrid,
    pub dt: f64,
    pub seed: u64,
}

/// Monte Carlo study of `E[sup_{t≤T} ‖I(t)‖^q_{L²}]` against `T^{q(1−δ)/2}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentReport {
    pub label: String,
    pub q: f64,
    pub delta: f64,
    /// `q(1−δ)/2`
    pub exponent: f64,
    pub horizons: Vec<f64>,
    pub estimates: Vec<Estimate>,
    /// `max_T estimate(T) / T^{exponent}`
    pub envelope_constant: f64,
    /// `estimate(T_max) / T_max^{exponent}`
    pub anchored_constant: f64,
    /// Holdout domination: with `Ĉ` the envelope constant of the even-indexed
    /// samples, the odd-indexed samples satisfy
    /// `estimate(T) − 2 SE(T) ≤ Ĉ T^{exponent}` for every `T`.
    pub dominated: bool,
    /// `estimate(T) − 2 SE(T) ≤ anchored_constant · T^{exponent}` for every `T`.
    pub anchored_dominates: bool,
    /// Whether `estimate(T)/T^{exponent}` is nonincreasing in `T` up to 2 SE.
    pub ratio_nonincreasing: bool,
    /// Log-log fit of the estimates against `T` (absent when all are zero).
    pub slope: Option<LineFit>,
    pub n_samples: u64,
    pub seed: u64,
}

/// Refuses `q ≤ 2/(1−δ)`.
pub fn check_moment_hypothesis(q: f64, delta: f64) -> Result<()> {
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::invalid(
            "delta",
            format!("{delta} is outside [0, 1)"),
        ));
    }
    let bound = 2.0 / (1.0 - delta);
    if !(q > bound) {
        return Err(Error::Hypothesis(format!(
            "the maximal inequality needs q > 2/(1−δ) = {bound}, got q = {q}"
        )));
    }
    Ok(())
}

pub fn maxineq_scaling(params: &MaxIneqParams, exec: Execution) -> Result<MomentReport> {
    check_moment_hypothesis(params.q, params.delta)?;
    let hs = &params.horizons;
    if hs.len() < 4 {
        return Err(Error::invalid(
            "horizons",
            "at least four horizons are required",
        ));
    }
    if hs.windows(2).any(|w| !(w[1] > w[0])) || !(hs[0] > 0.0) {
        return Err(Error::invalid(
            "horizons",
            "horizons must be positive and increasing",
        ));
    }
    let steps: Vec<usize> = hs
        .iter()
        .map(|t| {
            let n = (t / params.dt).round();
            if n < 1.0 || (n * params.dt - t).abs() > 1e-9 * t {
                Err(Error::invalid(
                    "dt",
                    format!("{} does not divide horizon {t}", params.dt),
                ))
            } else {
                Ok(n as usize)
            }
        })
        .collect::<Result<_>>()?;
    let n_max = *steps.last().expect("non-empty");
    let b = params.profile.realize(params.grid)?;
    let b_path = PathOfFields::constant(params.dt, n_max + 1, &[b])?;
    let driver = NoiseDriver::new(params.seed, 1)?;
    let per_sample = sup_moment_samples(exec, params.n_samples, params.q, 2.0, &steps, |i| {
        let incs = driver.sample_increments(i, n_max, params.dt)?;
        direct_conv(&b_path, &incs, params.delta)
    })?;
    let estimates = column_estimates(&per_sample, hs.len(), |_| true)?;

    let exponent = params.q * (1.0 - params.delta) / 2.0;
    let ratios: Vec<f64> = hs
        .iter()
        .zip(&estimates)
        .map(|(t, e)| e.mean / t.powf(exponent))
        .collect();
    let envelope_constant = ratios.iter().cloned().fold(0.0, f64::max);
    let anchored_constant = *ratios.last().expect("non-empty");
    let dominated_by = |c: f64, est: &[Estimate]| {
        hs.iter()
            .zip(est)
            .all(|(t, e)| e.lower(2.0) <= c * t.powf(exponent))
    };
    let anchored_dominates = dominated_by(anchored_constant, &estimates);
    let dominated = if params.n_samples >= 4 {
        let fit = column_estimates(&per_sample, hs.len(), |i| i % 2 == 0)?;
        let check = column_estimates(&per_sample, hs.len(), |i| i % 2 == 1)?;
        let c_fit = hs
            .iter()
            .zip(&fit)
            .map(|(t, e)| e.mean / t.powf(exponent))
            .fold(0.0, f64::max);
        dominated_by(c_fit, &check)
    } else {
        dominated_by(envelope_constant, &estimates)
    };
    let ratio_nonincreasing = (1..hs.len()).all(|i| {
        let scale = |j: usize| hs[j].powf(exponent);
        estimates[i].lower(2.0) / scale(i) <= estimates[i - 1].upper(2.0) / scale(i - 1)
    });
    let slope = if estimates.iter().all(|e| e.mean > 0.0) {
        let x: Vec<f64> = hs.iter().map(|t| t.ln()).collect();
        let y: Vec<f64> = estimates.iter().map(|e| e.mean.ln()).collect();
        Some(fit_line(&x, &y, None)?)
    } else {
        None
    };
    Ok(MomentReport {
        label: "E sup_{t<=T} |I(t)|_{L2}^q".into(),
        q: params.q,
        delta: params.delta,
        exponent,
        horizons: hs.clone(),
        estimates,
        envelope_constant,
        anchored_constant,
        dominated,
        anchored_dominates,
        ratio_nonincreasing,
        slope,
        n_samples: params.n_samples,
        seed: params.seed,
    })
}

/// `(1/(1−2α))^{p/2} · 1/(p(1−2α)/2 + 1) · (1/(1−λ))^{(p−1)/p}` with
/// `λ = p/(p−1) · (1 + δ/2 − α)`; the unspecified leading constant is 1.
pub fn assembled_constant(alpha: f64, p: f64, delta: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(Error::invalid(
            "alpha",
            format!("{alpha} is outside (0, 1/2)"),
        ));
    }
    if !(p > 1.0) {
        return Err(Error::invalid("p", format!("{p} must exceed 1")));
    }
    let lambda = p / (p - 1.0) * (1.0 + 0.5 * delta - alpha);
    if !(lambda < 1.0) {
        return Err(Error::Hypothesis(format!(
            "λ = {lambda:.4} ≥ 1 for α = {alpha}, p = {p}, δ = {delta}"
        )));
    }
    let a = 1.0 - 2.0 * alpha;
    Ok(a.powf(-p / 2.0) / (p / 2.0 * a + 1.0) * (1.0 - lambda).powf(-(p - 1.0) / p))
}

/// Range of `α` for which [`assembled_constant`] is finite.
pub fn admissible_alpha_range(p: f64, delta: f64) -> Option<(f64, f64)> {
    let lo = 1.0 + 0.5 * delta - (p - 1.0) / p;
    let lo = lo.max(0.0);
    if lo < 0.5 {
        Some((lo, 0.5))
    } else {
        None
    }
}

/// Grid minimizer of [`assembled_constant`] over the open admissible range.
pub fn optimal_alpha(p: f64, delta: f64, n_grid: usize) -> Result<(f64, f64)> {
    let (lo, hi) = admissible_alpha_range(p, delta).ok_or_else(|| {
        Error::Hypothesis(format!(
            "no α ∈ (0, 1/2) gives λ < 1 for p = {p}, δ = {delta}"
        ))
    })?;
    let mut best = (f64::NAN, f64::INFINITY);
    for i in 1..n_grid {
        let a = lo + (hi - lo) * i as f64 / n_grid as f64;
        if let Ok(c) = assembled_constant(a, p, delta) {
            if c < best.1 {
                best = (a, c);
            }
        }
    }
    if best.1.is_finite() {
        Ok(best)
    } else {
        Err(Error::Hypothesis(
            "assembled constant is infinite on the whole grid".into(),
        ))
    }
}
