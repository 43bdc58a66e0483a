use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::noise::BrownianIncrements;
use crate::spectral::{norm_lp, norm_sobolev, Multiplier, SpectralField};
use crate::stoch_conv::{direct_conv_any_order, drift_conv, PathOfFields};

use super::functions::InitialCondition;
use super::nemytskii::Nemytskii;
use super::problem::{ProblemSpec, SolveConfig};

/// Distances `sup_t ‖u^{n+1}_t − u^n_t‖_{L^p}` of one Picard run.
#[derive(Debug, Clone, PartialEq)]
pub struct PicardLog {
    pub distances: Vec<f64>,
    pub converged: bool,
}

impl PicardLog {
    pub fn iterations(&self) -> usize {
        self.distances.len()
    }

    /// `d_{n+1} / d_n`; zero distances give ratio zero.
    pub fn ratios(&self) -> Vec<f64> {
        self.distances
            .windows(2)
            .map(|w| if w[0] == 0.0 { 0.0 } else { w[1] / w[0] })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub path: PathOfFields,
    /// One entry per Picard segment; empty for time-stepping schemes.
    pub picard: Vec<PicardLog>,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.path.times()
    }

    pub fn states(&self) -> impl Iterator<Item = &SpectralField> {
        self.path.fields()
    }

    pub fn final_state(&self) -> &SpectralField {
        self.path.last()
    }

    /// Per-time `‖u‖_{L^p}`, `‖u‖_{W^{1,p}}` and `‖u‖_{W^{m,p}}`.
    pub fn diagnostics(&self, m: u32, p: f64) -> Result<Vec<[f64; 3]>> {
        self.states()
            .map(|u| {
                Ok([
                    norm_lp(u, p)?,
                    norm_sobolev(u, 1, p)?,
                    norm_sobolev(u, m, p)?,
                ])
            })
            .collect()
    }
}

fn check_incs(
    spec: &ProblemSpec,
    cfg: &SolveConfig,
    incs: &BrownianIncrements,
    n: usize,
) -> Result<()> {
    if incs.dim() != spec.noise_dim() {
        return Err(Error::SizeMismatch {
            expected: spec.noise_dim(),
            actual: incs.dim(),
        });
    }
    if incs.n_steps() != n {
        return Err(Error::SizeMismatch {
            expected: n,
            actual: incs.n_steps(),
        });
    }
    if (incs.dt() - cfg.dt).abs() > 1e-12 * cfg.dt {
        return Err(Error::invalid(
            "incs",
            format!("increment step {} differs from dt = {}", incs.dt(), cfg.dt),
        ));
    }
    Ok(())
}

fn sup_distance(a: &PathOfFields, b: &PathOfFields, p: f64) -> Result<f64> {
    let mut d = 0.0f64;
    for (x, y) in a.fields().zip(b.fields()) {
        d = d.max(norm_lp(&(x - y), p)?);
    }
    Ok(d)
}

fn sup_norm(a: &PathOfFields, p: f64) -> Result<f64> {
    let mut d = 0.0f64;
    for x in a.fields() {
        d = d.max(norm_lp(x, p)?);
    }
    Ok(d)
}

/// `t_j ↦ S_{t_j} u₀`.
fn free_flow(u0: &SpectralField, dt: f64, n: usize) -> Result<PathOfFields> {
    let grid = *u0.grid();
    let step = Multiplier::semigroup(grid, dt)?;
    let mut fields = Vec::with_capacity(n + 1);
    let mut cur = u0.clone();
    fields.push(cur.clone());
    for _ in 0..n {
        step.apply_in_place(&mut cur)?;
        fields.push(cur.clone());
    }
    PathOfFields::from_fields(dt, fields)
}

/// One application of the mild map
/// `(𝒦u)_t = S_t u₀ + ∫₀ᵗ (−Δ+1)^{δ₀} S_{t−s} F(u_s) ds + μ ∫₀ᵗ (−Δ+1)^{δ₁/2} S_{t−s} B(u_s) dW_s`.
pub(crate) fn mild_map(
    spec: &ProblemSpec,
    nem: &Nemytskii,
    flow: &PathOfFields,
    u: &PathOfFields,
    incs: &BrownianIncrements,
) -> Result<PathOfFields> {
    let dt = u.dt();
    let mut f_fields = Vec::with_capacity(u.len());
    let mut b_tuples = Vec::with_capacity(u.len());
    for x in u.fields() {
        let (f, b) = nem.evaluate(x)?;
        f_fields.push(f);
        b_tuples.push(b);
    }
    let drift = drift_conv(&PathOfFields::from_fields(dt, f_fields)?, spec.delta0)?;
    let noise = if spec.mu == 0.0 {
        None
    } else {
        Some(direct_conv_any_order(
            &PathOfFields::from_tuples(dt, b_tuples)?,
            incs,
            spec.delta1,
        )?)
    };
    let mut out = Vec::with_capacity(u.len());
    for j in 0..u.len() {
        let mut v = flow.at(j).clone();
        v += drift.at(j);
        if let Some(noise) = &noise {
            v.axpy(spec.mu, noise.at(j));
        }
        if !v.is_finite() {
            return Err(Error::NonFinite(format!(
                "Picard iterate at t = {}",
                u.time(j)
            )));
        }
        out.push(v);
    }
    PathOfFields::from_fields(dt, out)
}

/// Pathwise Picard iteration of the mild map on one noise realization.
///
/// Stops once `sup_t ‖u^{n+1} − u^n‖_{L^p} < tol (1 + sup_t ‖u^n‖_{L^p})`.
/// Three consecutive distance ratios `≥ 1`, or running out of iterations,
/// is reported as [`Error::NonContraction`].
pub fn picard_solve(
    spec: &ProblemSpec,
    cfg: &SolveConfig,
    incs: &BrownianIncrements,
) -> Result<Trajectory> {
    let n = cfg.validate(spec)?;
    check_incs(spec, cfg, incs, n)?;
    let (path, log) = picard_segment(spec, cfg, incs, n)?;
    Ok(Trajectory {
        path,
        picard: vec![log],
    })
}

fn picard_segment(
    spec: &ProblemSpec,
    cfg: &SolveConfig,
    incs: &BrownianIncrements,
    n: usize,
) -> Result<(PathOfFields, PicardLog)> {
    let nem = Nemytskii::new(spec, cfg.grid)?;
    let u0 = spec.u0.realize(cfg.grid)?;
    let flow = free_flow(&u0, cfg.dt, n)?;
    let mut u = flow.clone();
    let mut distances = Vec::new();
    let mut non_contracting = 0;
    for _ in 0..cfg.picard_max_iters {
        let next = mild_map(spec, &nem, &flow, &u, incs)?;
        let d = sup_distance(&next, &u, cfg.p)?;
        let scale = sup_norm(&u, cfg.p)?;
        if let Some(&prev) = distances.last() {
            if prev > 0.0 && d / prev >= 1.0 {
                non_contracting += 1;
            } else {
                non_contracting = 0;
            }
        }
        distances.push(d);
        u = next;
        if d < cfg.picard_tol * (1.0 + scale) {
            return Ok((
                u,
                PicardLog {
                    distances,
                    converged: true,
                },
            ));
        }
        if non_contracting >= 3 {
            break;
        }
    }
    let last_ratio = match distances.as_slice() {
        [.., a, b] if *a > 0.0 => b / a,
        _ => f64::NAN,
    };
    Err(Error::NonContraction {
        iterations: distances.len(),
        last_ratio,
    })
}

/// [`picard_solve`] that bisects the horizon (up to `max_depth` times) when
/// the iteration does not contract, chaining the pieces through their end
/// states.
pub fn picard_solve_split(
    spec: &ProblemSpec,
    cfg: &SolveConfig,
    incs: &BrownianIncrements,
    max_depth: u32,
) -> Result<Trajectory> {
    let n = cfg.validate(spec)?;
    check_incs(spec, cfg, incs, n)?;
    let mut fields: Vec<SpectralField> = Vec::new();
    let mut logs = Vec::new();
    split_rec(spec, cfg, incs, n, max_depth, &mut fields, &mut logs)?;
    Ok(Trajectory {
        path: PathOfFields::from_fields(cfg.dt, fields)?,
        picard: logs,
    })
}

fn split_rec(
    spec: &ProblemSpec,
    cfg: &SolveConfig,
    incs: &BrownianIncrements,
    n: usize,
    depth: u32,
    fields: &mut Vec<SpectralField>,
    logs: &mut Vec<PicardLog>,
) -> Result<()> {
    match picard_segment(spec, cfg, incs, n) {
        Ok((path, log)) => {
            let skip = usize::from(!fields.is_empty());
            fields.extend(path.into_fields().into_iter().skip(skip));
            logs.push(log);
            Ok(())
        }
        Err(Error::NonContraction { .. }) if depth > 0 && n >= 2 => {
            let n1 = n / 2;
            let first = ProblemSpec {
                horizon: n1 as f64 * cfg.dt,
                ..spec.clone()
            };
            split_rec(
                &first,
                cfg,
                &incs.slice(0, n1)?,
                n1,
                depth - 1,
                fields,
                logs,
            )?;
            let second = ProblemSpec {
                horizon: (n - n1) as f64 * cfg.dt,
                u0: InitialCondition::Field(fields.last().expect("segment is non-empty").clone()),
                ..spec.clone()
            };
            split_rec(
                &second,
                cfg,
                &incs.slice(n1, n - n1)?,
                n - n1,
                depth - 1,
                fields,
                logs,
            )
        }
        Err(e) => Err(e),
    }
}

/// Exponential Euler:
/// `u_{n+1} = S_dt u_n + dt (−Δ+1)^{δ₀} S_dt F(u_n) + μ (−Δ+1)^{δ₁/2} S_dt Σᵢ Bᵢ(u_n) ΔWⁱ_n`.
pub fn euler_solve(
    spec: &ProblemSpec,
    cfg: &SolveConfig,
    incs: &BrownianIncrements,
) -> Result<Trajectory> {
    let n = cfg.validate(spec)?;
    euler_core(spec, cfg, incs, n)
}

/// [`euler_solve`] without the moment hypothesis and with `δ₁ = 1` admitted.
pub fn euler_solve_critical(
    spec: &ProblemSpec,
    cfg: &SolveConfig,
    incs: &BrownianIncrements,
) -> Result<Trajectory> {
    spec.validate_critical()?;
    let n = cfg.validate_discretization(spec)?;
    euler_core(spec, cfg, incs, n)
}

fn euler_core(
    spec: &ProblemSpec,
    cfg: &SolveConfig,
    incs: &BrownianIncrements,
    n: usize,
) -> Result<Trajectory> {
    check_incs(spec, cfg, incs, n)?;
    let grid = cfg.grid;
    let nem = Nemytskii::new(spec, grid)?;
    let lams = grid.lambdas();
    let decay: Vec<f64> = lams.iter().map(|l| (-l * cfg.dt).exp()).collect();
    let drift_w: Vec<f64> = lams
        .iter()
        .zip(&decay)
        .map(|(l, e)| cfg.dt * (spec.delta0 * l.ln()).exp() * e)
        .collect();
    let noise_w: Vec<f64> = lams
        .iter()
        .zip(&decay)
        .map(|(l, e)| spec.mu * (0.5 * spec.delta1 * l.ln()).exp() * e)
        .collect();
    let mut u = spec.u0.realize(grid)?;
    let mut fields = Vec::with_capacity(n + 1);
    fields.push(u.clone());
    for j in 0..n {
        let (f, bs) = nem.evaluate(&u)?;
        let mut x = vec![Complex64::new(0.0, 0.0); grid.n_coeffs()];
        if spec.mu != 0.0 {
            for (b, dw) in bs.iter().zip(incs.step(j)) {
                for (xk, bk) in x.iter_mut().zip(b.coeffs()) {
                    *xk += bk * *dw;
                }
            }
        }
        let fc = f.coeffs();
        for (k, c) in u.coeffs_mut().iter_mut().enumerate() {
            *c = decay[k] * *c + drift_w[k] * fc[k] + noise_w[k] * x[k];
        }
        let norm = u.l2_norm_sq().sqrt();
        if !(norm <= cfg.blowup_cap) {
            return Err(Error::BlowUp {
                time: (j + 1) as f64 * cfg.dt,
                norm,
                cap: cfg.blowup_cap,
            });
        }
        fields.push(u.clone());
    }
    Ok(Trajectory {
        path: PathOfFields::from_fields(cfg.dt, fields)?,
        picard: Vec::new(),
    })
}

/// Per-time `W^{m,p}` and `W^{1,mp}` norms of a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct SobolevTrack {
    pub times: Vec<f64>,
    pub w_m_p: Vec<f64>,
    pub w_1_mp: Vec<f64>,
}

impl SobolevTrack {
    pub fn sup_w_m_p(&self) -> f64 {
        self.w_m_p.iter().cloned().fold(0.0, f64::max)
    }

    pub fn sup_w_1_mp(&self) -> f64 {
        self.w_1_mp.iter().cloned().fold(0.0, f64::max)
    }
}

pub fn sobolev_track(traj: &Trajectory, m: u32, p: f64) -> Result<SobolevTrack> {
    if m < 1 {
        return Err(Error::invalid("m", "smoothness index must be at least 1"));
    }
    let mut w_m_p = Vec::new();
    let mut w_1_mp = Vec::new();
    for u in traj.states() {
        w_m_p.push(norm_sobolev(u, m, p)?);
        w_1_mp.push(norm_sobolev(u, 1, m as f64 * p)?);
    }
    Ok(SobolevTrack {
        times: traj.times(),
        w_m_p,
        w_1_mp,
    })
}
