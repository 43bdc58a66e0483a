use super::field::SpectralField;
use super::grid::TorusGrid;
use super::multiplier::Multiplier;
use crate::error::{Error, Result};

fn check_p(p: f64) -> Result<()> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::invalid(
            "p",
            format!("norm exponent {p} must be ≥ 1"),
        ));
    }
    Ok(())
}

/// Collocation quadrature of `|v|^p` on the grid, to the power `1/p`.
/// `p = ∞` gives the largest nodal value.
pub fn lp_of_values(grid: &TorusGrid, values: &[f64], p: f64) -> Result<f64> {
    check_p(p)?;
    if values.len() != grid.n_points() {
        return Err(Error::SizeMismatch {
            expected: grid.n_points(),
            actual: values.len(),
        });
    }
    if p.is_infinite() {
        return Ok(values.iter().fold(0.0, |m, v| m.max(v.abs())));
    }
    let peak = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak == 0.0 {
        return Ok(0.0);
    }
    let s: f64 = values.iter().map(|v| (v.abs() / peak).powf(p)).sum();
    Ok(peak * (s * grid.quadrature_weight()).powf(1.0 / p))
}

/// `‖u‖_{L^p}`. For `p = 2` the coefficient sum is used.
pub fn norm_lp(field: &SpectralField, p: f64) -> Result<f64> {
    check_p(p)?;
    if p == 2.0 {
        return Ok(field.l2_norm_sq().sqrt());
    }
    lp_of_values(field.grid(), &field.values(), p)
}

/// All multi-indices `β ∈ ℕ^dim` with `|β| ≤ m`.
pub fn multi_indices(dim: usize, m: u32) -> Vec<Vec<u32>> {
    let mut out = vec![vec![]];
    for _ in 0..dim {
        let mut next = Vec::new();
        for prefix in &out {
            let used: u32 = prefix.iter().sum();
            for b in 0..=(m - used) {
                let mut v = prefix.clone();
                v.push(b);
                next.push(v);
            }
        }
        out = next;
    }
    out
}

/// `(Σ_{|β|≤m} ‖∂^β u‖_p^p)^{1/p}`.
pub fn norm_sobolev(field: &SpectralField, m: u32, p: f64) -> Result<f64> {
    check_p(p)?;
    let grid = *field.grid();
    if p == 2.0 {
        let w = sobolev_weights(&grid, m);
        let s: f64 = w
            .iter()
            .zip(field.coeffs())
            .map(|(w, c)| w * c.norm_sqr())
            .sum();
        return Ok(s.sqrt());
    }
    let mut parts = Vec::new();
    for beta in multi_indices(grid.dim(), m) {
        let d = Multiplier::derivative(grid, &beta)?.apply(field)?;
        parts.push(norm_lp(&d, p)?);
    }
    if p.is_infinite() {
        return Ok(parts.into_iter().fold(0.0, f64::max));
    }
    let peak = parts.iter().cloned().fold(0.0, f64::max);
    if peak == 0.0 {
        return Ok(0.0);
    }
    let s: f64 = parts.iter().map(|x| (x / peak).powf(p)).sum();
    Ok(peak * s.powf(1.0 / p))
}

/// Per-coefficient weights `w` with `‖u‖²_{W^{m,2}} = Σ w_k |c_k|²`.
pub fn sobolev_weights(grid: &TorusGrid, m: u32) -> Vec<f64> {
    let betas = multi_indices(grid.dim(), m);
    grid.frequencies()
        .zip(grid.plancherel_weights())
        .map(|(k, pw)| {
            let mut s = 0.0;
            'beta: for beta in &betas {
                let mut term = 1.0;
                for (axis, &b) in beta.iter().enumerate() {
                    if b == 0 {
                        continue;
                    }
                    if grid.is_nyquist(&k, axis) {
                        continue 'beta;
                    }
                    term *= (k[axis] as f64).powi(2 * b as i32);
                }
                s += term;
            }
            s * pw
        })
        .collect()
}

/// `‖(−Δ+1)^{α/2} u‖_{L^p}`.
pub fn norm_bessel(field: &SpectralField, alpha: f64, p: f64) -> Result<f64> {
    check_p(p)?;
    if p == 2.0 {
        let grid = field.grid();
        let s: f64 = grid
            .lambdas()
            .iter()
            .zip(grid.plancherel_weights())
            .zip(field.coeffs())
            .map(|((l, w), c)| (alpha * l.ln()).exp() * w * c.norm_sqr())
            .sum();
        return Ok(s.sqrt());
    }
    let g = Multiplier::frac_power(*field.grid(), alpha)?.apply(field)?;
    norm_lp(&g, p)
}
