use serde::Serialize;

use crate::error::{Error, Result};
use crate::stoch_conv::PathOfFields;

/// Discrete `W^{α,2}([0,T], H^{−1})` norm of a path, squared.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FracNorm {
    /// `Σ_n w_n ‖f(t_n)‖²_{H^{−1}} dt`
    pub l2_part: f64,
    /// `Σ_{n≠m} w_n w_m ‖f(t_n)−f(t_m)‖²_{H^{−1}} / |t_n−t_m|^{1+2α} dt²`
    pub seminorm: f64,
}

impl FracNorm {
    pub fn total(&self) -> f64 {
        self.l2_part + self.seminorm
    }
}

/// Trapezoid weights `w_n` (½ at both ends).
fn trapezoid(n: usize) -> Vec<f64> {
    let mut w = vec![1.0; n];
    if n > 1 {
        w[0] = 0.5;
        w[n - 1] = 0.5;
    }
    w
}

/// Gagliardo-type norm of the first component of `path` in time with values
/// in `H^{−1}`; diagonal cells are left out of the double sum.
pub fn frac_time_sobolev(path: &PathOfFields, alpha: f64) -> Result<FracNorm> {
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(Error::invalid(
            "alpha",
            format!("{alpha} is outside (0, 1/2); the double integral diverges for Brownian paths at α ≥ 1/2"),
        ));
    }
    let grid = *path.grid();
    let scale: Vec<f64> = grid
        .plancherel_weights()
        .iter()
        .zip(grid.lambdas())
        .map(|(w, l)| (w / l).sqrt())
        .collect();
    // H^{-1} isometry onto weighted coefficient vectors
    let rows: Vec<Vec<(f64, f64)>> = path
        .fields()
        .map(|f| {
            f.coeffs()
                .iter()
                .zip(&scale)
                .map(|(c, s)| (s * c.re, s * c.im))
                .collect()
        })
        .collect();
    let n = rows.len();
    let dt = path.dt();
    let w = trapezoid(n);
    let sq = |r: &[(f64, f64)]| r.iter().map(|(a, b)| a * a + b * b).sum::<f64>();
    let l2_part = rows.iter().zip(&w).map(|(r, wn)| wn * sq(r)).sum::<f64>() * dt;
    let kernel: Vec<f64> = (0..n)
        .map(|lag| {
            if lag == 0 {
                0.0
            } else {
                (lag as f64 * dt).powf(-1.0 - 2.0 * alpha)
            }
        })
        .collect();
    let mut seminorm = 0.0;
    for i in 0..n {
        let mut acc = 0.0;
        for j in i + 1..n {
            let d: f64 = rows[i]
                .iter()
                .zip(&rows[j])
                .map(|(a, b)| (a.0 - b.0).powi(2) + (a.1 - b.1).powi(2))
                .sum();
            acc += w[j] * d * kernel[j - i];
        }
        seminorm += w[i] * acc;
    }
    Ok(FracNorm {
        l2_part,
        seminorm: 2.0 * seminorm * dt * dt,
    })
}
