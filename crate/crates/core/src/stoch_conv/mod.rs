//! Stochastic and deterministic convolutions against the semigroup
//! `S_t = e^{t(Δ−1)}`.
//!
//! With `λ_k = |k|² + 1` every operator here is diagonal in `k`, so all
//! convolutions are evaluated mode by mode on coefficient arrays.
//!
//! * [`direct_conv`]: `I(t_n) = Σ_{j<n} λ^{δ/2} e^{−λ(t_n − t_j)} Σᵢ Bᵢ(t_j) ΔWⁱ_j`.
//! * [`factor_y`], [`factor_g`], [`factor_conv`]: the factorized form
//!   `(sin πα / π) G(Y)` of the same process.
//! * [`drift_conv`]: `∫₀ᵗ λ^{δ₀} S_{t−s} F(s) ds` with the semigroup integrated
//!   exactly over each step.

mod path;

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use path::PathOfFields;

use crate::error::{Error, Result};
use crate::noise::BrownianIncrements;
use crate::quadrature::gauss_legendre;
use crate::spectral::TorusGrid;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// How the singular time kernels are discretized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum QuadratureRule {
    /// Kernel sampled at the left end of each cell (`Y`), or integrated over
    /// the cell against the left-endpoint integrand value (`G`).
    LeftPoint,
    /// Kernel integrated exactly over each cell (`Y`); product trapezoid
    /// rule with exact kernel moments (`G`).
    #[default]
    KernelAveraged,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FactorizationConfig {
    pub alpha: f64,
    pub delta: f64,
    #[serde(default)]
    pub rule: QuadratureRule,
}

impl FactorizationConfig {
    pub const DEFAULT_ALPHA: f64 = 0.35;

    pub fn new(alpha: f64, delta: f64, rule: QuadratureRule) -> Result<Self> {
        let cfg = FactorizationConfig { alpha, delta, rule };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_delta(delta: f64) -> Result<Self> {
        Self::new(Self::DEFAULT_ALPHA, delta, QuadratureRule::KernelAveraged)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 0.5) {
            return Err(Error::invalid(
                "alpha",
                format!("{} is outside (0, 1/2)", self.alpha),
            ));
        }
        check_delta("delta", self.delta)
    }

    /// `λ = p/(p−1) · (1 + δ/2 − α)`; the operator `G` is bounded from
    /// `L^p` into continuous paths when `λ < 1`.
    pub fn holder_exponent(&self, p: f64) -> f64 {
        p / (p - 1.0) * (1.0 + 0.5 * self.delta - self.alpha)
    }
}

fn check_delta(name: &'static str, delta: f64) -> Result<()> {
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::invalid(name, format!("{delta} is outside [0, 1)")));
    }
    Ok(())
}

/// `∫_σ^t (t−s)^{α−1}(s−σ)^{−α} ds` by Gauss–Legendre after substitutions
/// that remove both endpoint singularities. Equals `π / sin(πα)`.
pub fn beta_identity(alpha: f64, sigma: f64, t: f64, n_quad: usize) -> Result<f64> {
    if !(sigma < t) {
        return Err(Error::invalid(
            "sigma",
            format!("need σ < t, got σ = {sigma}, t = {t}"),
        ));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(
            "alpha",
            format!("{alpha} is outside (0, 1)"),
        ));
    }
    if n_quad == 0 {
        return Err(Error::invalid("n_quad", "at least one node is required"));
    }
    let len = t - sigma;
    // s = σ + len·x; the Jacobian len cancels the kernel scaling len^{−1}.
    let scale = len * len.powf(alpha - 1.0) * len.powf(-alpha);
    let (nodes, weights) = gauss_legendre(n_quad);
    // x = v^{1/(1−α)} on [0, 1/2]
    let v_max = 0.5f64.powf(1.0 - alpha);
    let mut left = 0.0;
    for (z, w) in nodes.iter().zip(&weights) {
        let v = 0.5 * v_max * (z + 1.0);
        let x = v.powf(1.0 / (1.0 - alpha));
        left += w * (1.0 - x).powf(alpha - 1.0) / (1.0 - alpha);
    }
    left *= 0.5 * v_max;
    // 1 − x = w^{1/α} on [1/2, 1]
    let w_max = 0.5f64.powf(alpha);
    let mut right = 0.0;
    for (z, w) in nodes.iter().zip(&weights) {
        let u = 0.5 * w_max * (z + 1.0);
        let x = 1.0 - u.powf(1.0 / alpha);
        right += w * x.powf(-alpha) / alpha;
    }
    right *= 0.5 * w_max;
    Ok(scale * (left + right))
}

/// Per-step forcing `X_j = Σᵢ Bᵢ(t_j) ΔWⁱ_j` for `j < n_steps`.
fn noise_forcing(b_path: &PathOfFields, incs: &BrownianIncrements) -> Result<Vec<Vec<Complex64>>> {
    if b_path.width() != incs.dim() {
        return Err(Error::SizeMismatch {
            expected: incs.dim(),
            actual: b_path.width(),
        });
    }
    if b_path.len() < incs.n_steps() {
        return Err(Error::SizeMismatch {
            expected: incs.n_steps(),
            actual: b_path.len(),
        });
    }
    if (b_path.dt() - incs.dt()).abs() > 1e-12 * incs.dt() {
        return Err(Error::invalid(
            "incs",
            format!(
                "time step {} differs from the path step {}",
                incs.dt(),
                b_path.dt()
            ),
        ));
    }
    let n_coeffs = b_path.grid().n_coeffs();
    Ok((0..incs.n_steps())
        .map(|j| {
            let mut x = vec![ZERO; n_coeffs];
            for (b, dw) in b_path.tuple(j).iter().zip(incs.step(j)) {
                for (xk, bk) in x.iter_mut().zip(b.coeffs()) {
                    *xk += bk * *dw;
                }
            }
            x
        })
        .collect())
}

fn lambdas(grid: &TorusGrid) -> Vec<f64> {
    grid.lambdas()
}

/// `λ^{power}` computed in log space.
fn lambda_pow(lams: &[f64], power: f64) -> Vec<f64> {
    lams.iter().map(|l| (power * l.ln()).exp()).collect()
}

/// The stochastic convolution `∫₀ᵗ (−Δ+1)^{δ/2} S_{t−s} B(s) dW_s`, left-point
/// (Itô) sums, evaluated exactly per mode.
pub fn direct_conv(
    b_path: &PathOfFields,
    incs: &BrownianIncrements,
    delta1: f64,
) -> Result<PathOfFields> {
    check_delta("delta1", delta1)?;
    direct_conv_any_order(b_path, incs, delta1)
}

/// [`direct_conv`] without the restriction `δ < 1`, for the critical case.
pub fn direct_conv_any_order(
    b_path: &PathOfFields,
    incs: &BrownianIncrements,
    delta: f64,
) -> Result<PathOfFields> {
    if !delta.is_finite() {
        return Err(Error::invalid("delta", "must be finite"));
    }
    let x = noise_forcing(b_path, incs)?;
    let grid = *b_path.grid();
    let lams = lambdas(&grid);
    let power = lambda_pow(&lams, 0.5 * delta);
    let decay: Vec<f64> = lams.iter().map(|l| (-l * incs.dt()).exp()).collect();
    let mut rows = Vec::with_capacity(x.len() + 1);
    let mut cur = vec![ZERO; grid.n_coeffs()];
    rows.push(cur.clone());
    for xj in &x {
        for k in 0..cur.len() {
            cur[k] = decay[k] * (cur[k] + power[k] * xj[k]);
        }
        rows.push(cur.clone());
    }
    PathOfFields::from_coeff_rows(incs.dt(), grid, rows)
}

/// Weight of the kernel `(t−σ)^{−α}` on the cell `r` steps back.
fn y_weight(rule: QuadratureRule, alpha: f64, dt: f64, r: usize) -> f64 {
    let r = r as f64;
    match rule {
        QuadratureRule::LeftPoint => (r * dt).powf(-alpha),
        QuadratureRule::KernelAveraged => {
            dt.powf(-alpha) * (r.powf(1.0 - alpha) - (r - 1.0).powf(1.0 - alpha)) / (1.0 - alpha)
        }
    }
}

/// `(Y)_s = ∫₀ˢ (s−σ)^{−α} S_{s−σ} B(σ) dW_σ` on the time grid.
pub fn factor_y(
    b_path: &PathOfFields,
    incs: &BrownianIncrements,
    alpha: f64,
    rule: QuadratureRule,
) -> Result<PathOfFields> {
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(Error::invalid(
            "alpha",
            format!("{alpha} is outside (0, 1/2)"),
        ));
    }
    let x = noise_forcing(b_path, incs)?;
    let grid = *b_path.grid();
    let dt = incs.dt();
    let n = x.len();
    let lams = lambdas(&grid);
    let decay = decay_table(&lams, dt, n);
    let w: Vec<f64> = (0..=n)
        .map(|r| {
            if r == 0 {
                0.0
            } else {
                y_weight(rule, alpha, dt, r)
            }
        })
        .collect();
    let mut rows = Vec::with_capacity(n + 1);
    for m in 0..=n {
        let mut y = vec![ZERO; grid.n_coeffs()];
        for (j, xj) in x.iter().enumerate().take(m) {
            let r = m - j;
            let e = &decay[r];
            for k in 0..y.len() {
                y[k] += xj[k] * (w[r] * e[k]);
            }
        }
        rows.push(y);
    }
    PathOfFields::from_coeff_rows(dt, grid, rows)
}

/// `decay[r][k] = e^{−λ_k r dt}` for `r = 0 ..= n`.
fn decay_table(lams: &[f64], dt: f64, n: usize) -> Vec<Vec<f64>> {
    (0..=n)
        .map(|r| lams.iter().map(|l| (-l * r as f64 * dt).exp()).collect())
        .collect()
}

/// Cell weights `(a_r, b_r)` of `∫ τ^{α−1} h dτ` over `τ ∈ [(r−1)dt, r dt]`,
/// where `a_r` multiplies `h(r dt)` and `b_r` multiplies `h((r−1)dt)`.
fn g_weights(rule: QuadratureRule, alpha: f64, dt: f64, r: usize) -> (f64, f64) {
    let r = r as f64;
    let i0 = dt.powf(alpha) * (r.powf(alpha) - (r - 1.0).powf(alpha)) / alpha;
    match rule {
        QuadratureRule::LeftPoint => (i0, 0.0),
        QuadratureRule::KernelAveraged => {
            let i1 = dt.powf(alpha + 1.0) * (r.powf(alpha + 1.0) - (r - 1.0).powf(alpha + 1.0))
                / (alpha + 1.0);
            ((i1 - (r - 1.0) * dt * i0) / dt, (r * dt * i0 - i1) / dt)
        }
    }
}

/// `(G f)_t = ∫₀ᵗ (t−s)^{α−1} (−Δ+1)^{δ/2} S_{t−s} f(s) ds` by product
/// integration with the kernel moments computed in closed form.
pub fn factor_g(
    f_path: &PathOfFields,
    alpha: f64,
    delta: f64,
    rule: QuadratureRule,
) -> Result<PathOfFields> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(
            "alpha",
            format!("{alpha} is outside (0, 1)"),
        ));
    }
    check_delta("delta", delta)?;
    let grid = *f_path.grid();
    let dt = f_path.dt();
    let n = f_path.len() - 1;
    let lams = lambdas(&grid);
    let power = lambda_pow(&lams, 0.5 * delta);
    let decay = decay_table(&lams, dt, n);
    let w: Vec<(f64, f64)> = (0..=n)
        .map(|r| {
            if r == 0 {
                (0.0, 0.0)
            } else {
                g_weights(rule, alpha, dt, r)
            }
        })
        .collect();
    let f: Vec<&[Complex64]> = f_path.fields().map(|x| x.coeffs()).collect();
    let mut rows = Vec::with_capacity(n + 1);
    for m in 0..=n {
        let mut g = vec![ZERO; grid.n_coeffs()];
        for r in 1..=m {
            let (a, b) = w[r];
            let (far, near) = (f[m - r], f[m - r + 1]);
            let (e_far, e_near) = (&decay[r], &decay[r - 1]);
            for k in 0..g.len() {
                g[k] += far[k] * (a * e_far[k]) + near[k] * (b * e_near[k]);
            }
        }
        for k in 0..g.len() {
            g[k] *= power[k];
        }
        rows.push(g);
    }
    PathOfFields::from_coeff_rows(dt, grid, rows)
}

/// `(sin πα / π) · G(Y(B))`, the factorized stochastic convolution.
pub fn factor_conv(
    b_path: &PathOfFields,
    incs: &BrownianIncrements,
    cfg: &FactorizationConfig,
) -> Result<PathOfFields> {
    cfg.validate()?;
    let y = factor_y(b_path, incs, cfg.alpha, cfg.rule)?;
    let g = factor_g(&y, cfg.alpha, cfg.delta, cfg.rule)?;
    Ok(g.scaled((PI * cfg.alpha).sin() / PI))
}

/// `D(t_n) = Σ_{j<n} λ^{δ₀} ∫_{t_j}^{t_{j+1}} e^{−λ(t_n − s)} ds · F(t_j)`.
pub fn drift_conv(f_path: &PathOfFields, delta0: f64) -> Result<PathOfFields> {
    check_delta("delta0", delta0)?;
    let grid = *f_path.grid();
    let dt = f_path.dt();
    let lams = lambdas(&grid);
    let (decay, weight) = drift_step_factors(&lams, delta0, dt);
    let mut rows = Vec::with_capacity(f_path.len());
    let mut cur = vec![ZERO; grid.n_coeffs()];
    rows.push(cur.clone());
    for f in f_path.fields().take(f_path.len() - 1) {
        for (k, c) in f.coeffs().iter().enumerate() {
            cur[k] = decay[k] * cur[k] + weight[k] * c;
        }
        rows.push(cur.clone());
    }
    PathOfFields::from_coeff_rows(dt, grid, rows)
}

/// `(e^{−λ dt}, λ^{δ₀}(1 − e^{−λ dt})/λ)` per mode.
pub(crate) fn drift_step_factors(lams: &[f64], delta0: f64, dt: f64) -> (Vec<f64>, Vec<f64>) {
    let decay = lams.iter().map(|l| (-l * dt).exp()).collect();
    let weight = lams
        .iter()
        .map(|l| ((delta0 - 1.0) * l.ln()).exp() * -(-l * dt).exp_m1())
        .collect();
    (decay, weight)
}
