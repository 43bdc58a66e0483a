use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::mild_solver::{euler_solve_critical, Nemytskii, ProblemSpec, SolveConfig};
use crate::noise::{BrownianIncrements, NoiseDriver};

use super::stats::{fit_line, Estimate, LineFit};

/// Monte Carlo averages of the terms of the Itô energy balance
/// `‖u_t‖² = ‖u₀‖² − 2∫‖u‖²_{H¹} + 2∫⟨u, (−Δ+1)^{δ₀}F(u)⟩ + μ²∫Σᵢ‖(−Δ+1)^{δ₁/2}Bᵢ(u)‖² + M_t`
/// along exponential Euler paths.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyReport {
    pub times: Vec<f64>,
    /// `E‖u(t_n)‖²_{L²}`
    pub l2_sq: Vec<Estimate>,
    /// `E Σ_{j<n} ‖u_j‖²_{H¹} dt`
    pub h1_integral: Vec<Estimate>,
    /// `μ² E Σ_{j<n} Σᵢ ‖(−Δ+1)^{δ₁/2}Bᵢ(u_j)‖² dt`
    pub ito_correction: Vec<Estimate>,
    /// Pathwise balance residual; its mean is the residual of the averaged
    /// balance, its fluctuations are reduced by subtracting the martingale
    /// and quadratic-variation sums of the same path.
    pub residual: Vec<Estimate>,
    pub dt: f64,
    pub n_samples: u64,
}

impl EnergyReport {
    /// Index and value of `max_n |E R_n|`.
    pub fn residual_sup(&self) -> (usize, Estimate) {
        let mut best = (0, self.residual[0]);
        for (n, r) in self.residual.iter().enumerate() {
            if r.mean.abs() > best.1.mean.abs() {
                best = (n, *r);
            }
        }
        (
            best.0,
            Estimate {
                mean: best.1.mean.abs(),
                ..best.1
            },
        )
    }
}

struct SampleTerms {
    l2: Vec<f64>,
    h1: Vec<f64>,
    ito: Vec<f64>,
    residual: Vec<f64>,
}

fn sample_terms(
    spec: &ProblemSpec,
    cfg: &SolveConfig,
    nem: &Nemytskii,
    incs: &BrownianIncrements,
) -> Result<SampleTerms> {
    let traj = euler_solve_critical(spec, cfg, incs)?;
    let grid = cfg.grid;
    let w = grid.plancherel_weights();
    let lams = grid.lambdas();
    let drift_pow: Vec<f64> = lams.iter().map(|l| (spec.delta0 * l.ln()).exp()).collect();
    let noise_pow: Vec<f64> = lams
        .iter()
        .map(|l| (0.5 * spec.delta1 * l.ln()).exp())
        .collect();
    let states: Vec<_> = traj.states().collect();
    let dt = cfg.dt;
    let e0 = states[0].l2_norm_sq();
    let n = states.len();
    let mut out = SampleTerms {
        l2: Vec::with_capacity(n),
        h1: Vec::with_capacity(n),
        ito: Vec::with_capacity(n),
        residual: Vec::with_capacity(n),
    };
    let (mut h1, mut ito, mut drift, mut qv, mut mart) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (j, u) in states.iter().enumerate() {
        let e = u.l2_norm_sq();
        out.l2.push(e);
        out.h1.push(h1);
        out.ito.push(ito);
        out.residual
            .push(e - e0 + 2.0 * h1 - 2.0 * drift - qv - 2.0 * mart);
        if j + 1 == n {
            break;
        }
        let (f, bs) = nem.evaluate(u)?;
        let uc = u.coeffs();
        let fc = f.coeffs();
        let mut x = vec![Complex64::new(0.0, 0.0); grid.n_coeffs()];
        for (b, dw) in bs.iter().zip(incs.step(j)) {
            let bc = b.coeffs();
            for k in 0..x.len() {
                x[k] += bc[k] * *dw;
            }
            ito += spec.mu.powi(2)
                * dt
                * (0..bc.len())
                    .map(|k| w[k] * noise_pow[k].powi(2) * bc[k].norm_sqr())
                    .sum::<f64>();
        }
        for k in 0..uc.len() {
            h1 += dt * w[k] * lams[k] * uc[k].norm_sqr();
            drift += dt * w[k] * drift_pow[k] * (uc[k].conj() * fc[k]).re;
            let xk = spec.mu * noise_pow[k] * x[k];
            qv += w[k] * xk.norm_sqr();
            mart += w[k] * (uc[k].conj() * xk).re;
        }
    }
    Ok(out)
}

fn energy_with<G>(
    spec: &ProblemSpec,
    cfg: &SolveConfig,
    n_samples: u64,
    exec: Execution,
    incs_for: G,
) -> Result<EnergyReport>
where
    G: Fn(u64) -> Result<BrownianIncrements> + Sync + Send,
{
    if cfg.p != 2.0 {
        return Err(Error::invalid(
            "p",
            "the energy balance is an L² identity; set p = 2",
        ));
    }
    let n_steps = cfg.validate_discretization(spec)?;
    let nem = Nemytskii::new(spec, cfg.grid)?;
    let samples = exec.try_map(n_samples, |i| sample_terms(spec, cfg, &nem, &incs_for(i)?))?;
    let column = |n: usize, pick: fn(&SampleTerms) -> &Vec<f64>| {
        let xs: Vec<f64> = samples.iter().map(|s| pick(s)[n]).collect();
        Estimate::from_samples(&xs)
    };
    let mut report = EnergyReport {
        times: (0..=n_steps).map(|n| n as f64 * cfg.dt).collect(),
        l2_sq: Vec::new(),
        h1_integral: Vec::new(),
        ito_correction: Vec::new(),
        residual: Vec::new(),
        dt: cfg.dt,
        n_samples,
    };
    for n in 0..=n_steps {
        report.l2_sq.push(column(n, |s| &s.l2)?);
        report.h1_integral.push(column(n, |s| &s.h1)?);
        report.ito_correction.push(column(n, |s| &s.ito)?);
        report.residual.push(column(n, |s| &s.residual)?);
    }
    Ok(report)
}

/// Energy balance over `n_samples` Euler paths; sample `i` is driven by
/// stream `i` of `NoiseDriver::new(seed, d)`.
pub fn energy_balance(
    spec: &ProblemSpec,
    cfg: &SolveConfig,
    n_samples: u64,
    seed: u64,
    exec: Execution,
) -> Result<EnergyReport> {
    spec.validate_critical()?;
    let n_steps = cfg.validate_discretization(spec)?;
    let driver = NoiseDriver::new(seed, spec.noise_dim())?;
    energy_with(spec, cfg, n_samples, exec, |i| {
        driver.sample_increments(i, n_steps, cfg.dt)
    })
}

/// Convergence of `max_n |E R_n|` under time-step refinement.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyRate {
    pub dts: Vec<f64>,
    pub sup_residual: Vec<Estimate>,
    /// Fit of `log max_n |E R_n|` against `log dt`.
    pub fit: LineFit,
}

/// Runs [`energy_balance`] at `base_dt · factor` for every factor, with the
/// increments of each coarse run summed from the same fine increments.
pub fn energy_rate(
    spec: &ProblemSpec,
    cfg: &SolveConfig,
    factors: &[usize],
    n_samples: u64,
    seed: u64,
    exec: Execution,
) -> Result<EnergyRate> {
    if factors.len() < 2 {
        return Err(Error::invalid(
            "factors",
            "at least two step sizes are required",
        ));
    }
    spec.validate_critical()?;
    let n_fine = cfg.validate_discretization(spec)?;
    let driver = NoiseDriver::new(seed, spec.noise_dim())?;
    let mut dts = Vec::new();
    let mut sup_residual = Vec::new();
    for &f in factors {
        if f == 0 || n_fine % f != 0 {
            return Err(Error::invalid(
                "factors",
                format!("{f} does not divide {n_fine} steps"),
            ));
        }
        let coarse = SolveConfig {
            dt: cfg.dt * f as f64,
            ..cfg.clone()
        };
        let report = energy_with(spec, &coarse, n_samples, exec, |i| {
            driver.sample_increments(i, n_fine, cfg.dt)?.coarsen(f)
        })?;
        dts.push(coarse.dt);
        sup_residual.push(report.residual_sup().1);
    }
    let x: Vec<f64> = dts.iter().map(|d| d.ln()).collect();
    let y: Vec<f64> = sup_residual
        .iter()
        .map(|e| e.mean.max(f64::MIN_POSITIVE).ln())
        .collect();
    let fit = fit_line(&x, &y, None)?;
    Ok(EnergyRate {
        dts,
        sup_residual,
        fit,
    })
}

/// The a priori energy inequality `E‖u_t‖² ≤ E‖u₀‖² + Ĉ μ² t`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyBound {
    pub c_w12: f64,
    pub mu: f64,
    /// `√(2/Ĉ)`
    pub mu_threshold: f64,
    /// `μ² < 2/Ĉ`; without it the inequality is not claimed.
    pub applicable: bool,
    /// Every grid time satisfies `mean − 3 SE ≤ bound`.
    pub holds: bool,
    /// `min_n (bound_n − mean_n) / SE_n` (infinite where SE vanishes).
    pub worst_margin_se: f64,
    /// `(E‖u₀‖² + Ĉ μ² T) / (2 − Ĉ μ²)`, the bound on `E∫‖u‖²_{H¹}`.
    pub h1_bound: Option<f64>,
    /// Whether `E Σ ‖u_j‖²_{H¹} dt` stays below `h1_bound` within 3 SE.
    pub h1_holds: Option<bool>,
}

pub fn energy_bound_check(report: &EnergyReport, c_w12: f64, mu: f64) -> EnergyBound {
    let e0 = report.l2_sq[0].mean;
    let c = c_w12 * mu * mu;
    let applicable = c < 2.0;
    let mut holds = true;
    let mut worst = f64::INFINITY;
    for (t, est) in report.times.iter().zip(&report.l2_sq) {
        let bound = e0 + c * t;
        holds &= est.lower(3.0) <= bound;
        let margin = if est.se > 0.0 {
            (bound - est.mean) / est.se
        } else if est.mean <= bound {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        };
        worst = worst.min(margin);
    }
    let horizon = *report.times.last().expect("non-empty");
    let h1_bound = applicable.then(|| (e0 + c * horizon) / (2.0 - c));
    let h1_holds = h1_bound.map(|b| report.h1_integral.last().expect("non-empty").lower(3.0) <= b);
    EnergyBound {
        c_w12,
        mu,
        mu_threshold: (2.0 / c_w12).sqrt(),
        applicable,
        holds,
        worst_margin_se: worst,
        h1_bound,
        h1_holds,
    }
}
