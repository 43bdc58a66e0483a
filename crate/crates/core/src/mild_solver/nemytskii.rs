use crate::error::{Error, Result};
use crate::noise::gamma_norm;
use crate::spectral::{
    norm_lp, norm_sobolev, transform, SpectralField, TorusGrid, VectorMultiplier,
};

use super::functions::{random_smooth_field, Diffusion, ScalarFn};
use super::problem::ProblemSpec;

enum Prepared {
    Pointwise(ScalarFn),
    Additive(SpectralField),
    Divergence(Vec<ScalarFn>, VectorMultiplier),
}

/// Nemytskii operators of a problem, prepared for one grid.
///
/// Functions are evaluated on the collocation points, transformed back and
/// stripped of their Nyquist content.
pub struct Nemytskii {
    grid: TorusGrid,
    drift: ScalarFn,
    drift_is_zero: bool,
    diffusion: Vec<Prepared>,
}

fn pointwise(g: &ScalarFn, grid: &TorusGrid, values: &[f64], what: &str) -> Result<SpectralField> {
    let mapped: Vec<f64> = values.iter().map(|&v| g.eval(v)).collect();
    if mapped.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("{what} = {}", g.name())));
    }
    let mut f = transform(grid, &mapped)?;
    f.zero_nyquist();
    Ok(f)
}

impl Nemytskii {
    pub fn new(spec: &ProblemSpec, grid: TorusGrid) -> Result<Self> {
        let diffusion = spec
            .diffusion
            .iter()
            .map(|d| -> Result<Prepared> {
                Ok(match d {
                    Diffusion::Pointwise(g) => Prepared::Pointwise(g.clone()),
                    Diffusion::Additive(p) => Prepared::Additive(p.realize(grid)?),
                    Diffusion::Divergence(gs) => {
                        if gs.len() != grid.dim() {
                            return Err(Error::SizeMismatch {
                                expected: grid.dim(),
                                actual: gs.len(),
                            });
                        }
                        Prepared::Divergence(gs.clone(), VectorMultiplier::inv_sqrt_div(grid))
                    }
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Nemytskii {
            grid,
            drift_is_zero: spec.drift == ScalarFn::Constant(0.0),
            drift: spec.drift.clone(),
            diffusion,
        })
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    fn check(&self, u: &SpectralField) -> Result<()> {
        if *u.grid() != self.grid {
            return Err(Error::GridMismatch(format!(
                "field on {:?}, solver grid {:?}",
                u.grid(),
                self.grid
            )));
        }
        Ok(())
    }

    pub fn drift(&self, u: &SpectralField) -> Result<SpectralField> {
        self.check(u)?;
        if self.drift_is_zero {
            return Ok(SpectralField::zeros(self.grid));
        }
        pointwise(&self.drift, &self.grid, &u.values(), "F")
    }

    pub fn diffusion(&self, u: &SpectralField) -> Result<Vec<SpectralField>> {
        self.check(u)?;
        let needs_values = self
            .diffusion
            .iter()
            .any(|d| !matches!(d, Prepared::Additive(_)));
        let values = if needs_values { u.values() } else { Vec::new() };
        self.diffusion_from_values(&values)
    }

    /// `(F(u), [B₁(u), …, B_d(u)])` sharing one inverse transform.
    pub fn evaluate(&self, u: &SpectralField) -> Result<(SpectralField, Vec<SpectralField>)> {
        self.check(u)?;
        let values = u.values();
        let f = if self.drift_is_zero {
            SpectralField::zeros(self.grid)
        } else {
            pointwise(&self.drift, &self.grid, &values, "F")?
        };
        Ok((f, self.diffusion_from_values(&values)?))
    }

    fn diffusion_from_values(&self, values: &[f64]) -> Result<Vec<SpectralField>> {
        self.diffusion
            .iter()
            .map(|d| match d {
                Prepared::Pointwise(g) => pointwise(g, &self.grid, values, "B"),
                Prepared::Additive(b) => Ok(b.clone()),
                Prepared::Divergence(gs, div) => {
                    let parts = gs
                        .iter()
                        .map(|g| pointwise(g, &self.grid, values, "B"))
                        .collect::<Result<Vec<_>>>()?;
                    div.apply(&parts)
                }
            })
            .collect()
    }
}

/// `F(u)` for the drift of `spec`.
pub fn nemytskii_f(spec: &ProblemSpec, u: &SpectralField) -> Result<SpectralField> {
    Nemytskii::new(spec, *u.grid())?.drift(u)
}

/// `[B₁(u), …, B_d(u)]` for the diffusion of `spec`.
pub fn nemytskii_b(spec: &ProblemSpec, u: &SpectralField) -> Result<Vec<SpectralField>> {
    Nemytskii::new(spec, *u.grid())?.diffusion(u)
}

/// Empirical constants of the coefficient operators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthConstants {
    /// `max ‖F(u)−F(v)‖_{L²} / ‖u−v‖_{L²}`
    pub lip_f: f64,
    /// `max ‖B(u)−B(v)‖_γ / ‖u−v‖_{L²}`
    pub lip_b: f64,
    /// `max ‖B(u)‖²_γ / (1 + ‖u‖²_{L²})`
    pub growth: f64,
    /// `max Σᵢ ‖Bᵢ(u)‖²_{W^{1,2}} / (1 + ‖u‖²_{W^{1,2}})`
    pub w12: f64,
}

impl GrowthConstants {
    pub fn lip(&self) -> f64 {
        self.lip_f.max(self.lip_b)
    }

    /// `√(2/Ĉ_w12)`, the noise level below which the energy estimate closes.
    pub fn mu_threshold(&self) -> f64 {
        (2.0 / self.w12).sqrt()
    }
}

/// Monte Carlo sup-ratios over random smooth fields whose amplitudes are
/// log-spaced over `[0.1, 30]`. Sample `i` uses stream `(seed, first_index + i)`.
pub fn growth_constants(
    spec: &ProblemSpec,
    grid: TorusGrid,
    n_samples: usize,
    seed: u64,
    first_index: u64,
) -> Result<GrowthConstants> {
    let nem = Nemytskii::new(spec, grid)?;
    let mut out = GrowthConstants {
        lip_f: 0.0,
        lip_b: 0.0,
        growth: 0.0,
        w12: 0.0,
    };
    let n = n_samples.max(1);
    for i in 0..n {
        let idx = first_index + i as u64;
        let amp = 0.1 * 300f64.powf(i as f64 / n.saturating_sub(1).max(1) as f64);
        let u = random_smooth_field(grid, seed, 2 * idx, 1.0, amp);
        let h = random_smooth_field(grid, seed, 2 * idx + 1, 1.0, 0.1 * amp);
        let v = &u + &h;
        let (fu, bu) = nem.evaluate(&u)?;
        let (fv, bv) = nem.evaluate(&v)?;
        let du = norm_lp(&h, 2.0)?;
        if du > 0.0 {
            out.lip_f = out.lip_f.max(norm_lp(&(&fu - &fv), 2.0)? / du);
            let diffs: Vec<SpectralField> = bu.iter().zip(&bv).map(|(a, b)| a - b).collect();
            out.lip_b = out.lip_b.max(gamma_norm(&diffs, 2.0)? / du);
        }
        let u2 = u.l2_norm_sq();
        out.growth = out.growth.max(gamma_norm(&bu, 2.0)?.powi(2) / (1.0 + u2));
        let mut b_w12 = 0.0;
        for b in &bu {
            b_w12 += norm_sobolev(b, 1, 2.0)?.powi(2);
        }
        out.w12 = out
            .w12
            .max(b_w12 / (1.0 + norm_sobolev(&u, 1, 2.0)?.powi(2)));
    }
    Ok(out)
}
