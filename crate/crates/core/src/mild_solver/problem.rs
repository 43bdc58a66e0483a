use crate::error::{Error, Result};
use crate::spectral::TorusGrid;
use crate::stoch_conv::FactorizationConfig;

use super::functions::{Diffusion, InitialCondition, ScalarFn};

/// One instance of
/// `du = (Δ−1)u dt + (−Δ+1)^{δ₀} F(u) dt + μ (−Δ+1)^{δ₁/2} Σᵢ Bᵢ(u) dβⁱ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub delta0: f64,
    pub delta1: f64,
    pub mu: f64,
    pub drift: ScalarFn,
    pub diffusion: Vec<Diffusion>,
    pub u0: InitialCondition,
    pub horizon: f64,
}

impl ProblemSpec {
    /// Noise dimension `d`.
    pub fn noise_dim(&self) -> usize {
        self.diffusion.len()
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_with_max_delta1(false)
    }

    /// Like [`ProblemSpec::validate`] but admits `δ₁ = 1`.
    pub fn validate_critical(&self) -> Result<()> {
        self.validate_with_max_delta1(true)
    }

    fn validate_with_max_delta1(&self, allow_one: bool) -> Result<()> {
        let cfg = |field: &str, message: String| Error::Config {
            field: field.to_string(),
            message,
        };
        if !(0.0..1.0).contains(&self.delta0) {
            return Err(cfg("delta0", format!("{} is outside [0, 1)", self.delta0)));
        }
        let top_ok = if allow_one {
            self.delta1 <= 1.0
        } else {
            self.delta1 < 1.0
        };
        if !(self.delta1 >= 0.0 && top_ok) {
            let range = if allow_one { "[0, 1]" } else { "[0, 1)" };
            return Err(cfg("delta1", format!("{} is outside {range}", self.delta1)));
        }
        if !self.mu.is_finite() {
            return Err(cfg("mu", "must be finite".into()));
        }
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(cfg("horizon", format!("{} must be positive", self.horizon)));
        }
        if self.diffusion.is_empty() {
            return Err(cfg(
                "diffusion",
                "at least one noise component is required".into(),
            ));
        }
        Ok(())
    }

    /// Empirical linear-growth constant `sup Σᵢ|gᵢ(ξ)|² / (1+ξ²)` of the
    /// pointwise diffusion functions over `|ξ| ≤ 10⁴`.
    ///
    /// Fails when the ratio keeps growing with `|ξ|`, i.e. when the
    /// coefficients grow faster than linearly.
    pub fn check_growth(&self, n_samples: usize) -> Result<f64> {
        let fns: Vec<&ScalarFn> = self
            .diffusion
            .iter()
            .flat_map(|d| match d {
                Diffusion::Pointwise(g) => vec![g],
                Diffusion::Divergence(gs) => gs.iter().collect(),
                Diffusion::Additive(_) => vec![],
            })
            .collect();
        let ratio_up_to = |r: f64| -> f64 {
            let n = n_samples.max(2);
            (0..n)
                .map(|i| {
                    let xi = -r + 2.0 * r * i as f64 / (n - 1) as f64;
                    fns.iter().map(|g| g.eval(xi).powi(2)).sum::<f64>() / (1.0 + xi * xi)
                })
                .fold(0.0, f64::max)
        };
        let near = ratio_up_to(1e2);
        let far = ratio_up_to(1e4);
        if far > 4.0 * near + 1.0 {
            return Err(Error::Hypothesis(format!(
                "diffusion grows faster than linearly: Σ|Bᵢ(ξ)|²/(1+ξ²) reaches {far:e} for |ξ| ≤ 1e4"
            )));
        }
        Ok(far)
    }
}

/// Discretization and moment parameters of a solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveConfig {
    pub grid: TorusGrid,
    pub dt: f64,
    pub picard_tol: f64,
    pub picard_max_iters: usize,
    /// Moment exponent of the pathwise-uniform norm.
    pub q: f64,
    /// Spatial integrability exponent.
    pub p: f64,
    /// Spatial smoothness index.
    pub m: u32,
    /// Euler aborts once `‖u‖_{L²}` exceeds this.
    pub blowup_cap: f64,
    pub factorization: FactorizationConfig,
}

impl SolveConfig {
    pub fn new(grid: TorusGrid, dt: f64) -> Self {
        SolveConfig {
            grid,
            dt,
            picard_tol: 1e-8,
            picard_max_iters: 50,
            q: 8.0,
            p: 2.0,
            m: 1,
            blowup_cap: 1e8,
            factorization: FactorizationConfig {
                alpha: FactorizationConfig::DEFAULT_ALPHA,
                delta: 0.0,
                rule: Default::default(),
            },
        }
    }

    /// Checks the configuration against `spec` and returns the step count.
    pub fn validate(&self, spec: &ProblemSpec) -> Result<usize> {
        spec.validate()?;
        let bound = 2.0 / (1.0 - spec.delta1);
        if !(self.q > bound) {
            return Err(Error::Hypothesis(format!(
                "moment exponent q = {} must exceed 2/(1−δ₁) = {bound}",
                self.q
            )));
        }
        self.validate_discretization(spec)
    }

    /// The discretization checks alone, without the moment hypothesis.
    pub fn validate_discretization(&self, spec: &ProblemSpec) -> Result<usize> {
        let cfg = |field: &str, message: String| Error::Config {
            field: field.to_string(),
            message,
        };
        if !(self.p >= 2.0) {
            return Err(cfg("p", format!("{} must be at least 2", self.p)));
        }
        if self.grid.points() < 2 * self.grid.modes() {
            return Err(cfg(
                "points",
                format!(
                    "{} collocation points cannot dealias {} modes; need at least {}",
                    self.grid.points(),
                    self.grid.modes(),
                    2 * self.grid.modes()
                ),
            ));
        }
        if !(self.picard_tol > 0.0) {
            return Err(cfg("picard_tol", "must be positive".into()));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(cfg("dt", format!("{} must be positive", self.dt)));
        }
        let n = (spec.horizon / self.dt).round();
        if n < 1.0 || (n * self.dt - spec.horizon).abs() > 1e-9 * spec.horizon {
            return Err(cfg(
                "dt",
                format!("{} does not divide the horizon {}", self.dt, spec.horizon),
            ));
        }
        Ok(n as usize)
    }
}

/// The problem `du = (Δ−1)u dt + μ (−Δ+1)^{δ₁/2} Σᵢ (−Δ+1)^{−1/2} div Bᵢ(u) dβⁱ`.
///
/// `vector_fields[i]` lists the `dim` scalar functions making up `Bᵢ`.
pub fn div_noise_spec(
    vector_fields: Vec<Vec<ScalarFn>>,
    dim: usize,
    delta1: f64,
    mu: f64,
    u0: InitialCondition,
    horizon: f64,
) -> Result<ProblemSpec> {
    if vector_fields.is_empty() {
        return Err(Error::invalid(
            "vector_fields",
            "at least one component is required",
        ));
    }
    for v in &vector_fields {
        if v.len() != dim {
            return Err(Error::SizeMismatch {
                expected: dim,
                actual: v.len(),
            });
        }
    }
    let spec = ProblemSpec {
        delta0: 0.0,
        delta1,
        mu,
        drift: ScalarFn::Constant(0.0),
        diffusion: vector_fields
            .into_iter()
            .map(Diffusion::Divergence)
            .collect(),
        u0,
        horizon,
    };
    spec.validate_critical()?;
    Ok(spec)
}
