use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported spatial dimension.
pub const MAX_DIM: usize = 2;

/// A lattice frequency. Entries beyond the grid dimension are zero.
pub type Wavevector = [i64; MAX_DIM];

/// Uniform discretization of the torus `[0, 2π)^N`.
///
/// Spectral fields keep the `K^N` frequencies `{−K/2+1, …, K/2}^N`; physical
/// values live on `M^N` equispaced collocation points with `M ≥ K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TorusGrid {
    dim: usize,
    modes: usize,
    points: usize,
}

impl TorusGrid {
    pub fn new(dim: usize, modes: usize, points: usize) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(Error::invalid("dim", format!("{dim} not in {{1, 2}}")));
        }
        if modes < 4 || !modes.is_multiple_of(2) {
            return Err(Error::invalid(
                "modes_per_dim",
                format!("{modes} must be even and at least 4"),
            ));
        }
        if points < modes {
            return Err(Error::invalid(
                "points_per_dim",
                format!("{points} is smaller than modes_per_dim = {modes}"),
            ));
        }
        Ok(TorusGrid { dim, modes, points })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Retained modes per dimension, `K`.
    pub fn modes(&self) -> usize {
        self.modes
    }

    /// Collocation points per dimension, `M`.
    pub fn points(&self) -> usize {
        self.points
    }

    pub fn n_coeffs(&self) -> usize {
        self.modes.pow(self.dim as u32)
    }

    pub fn n_points(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    pub fn nyquist(&self) -> i64 {
        (self.modes / 2) as i64
    }

    pub fn min_frequency(&self) -> i64 {
        1 - self.nyquist()
    }

    /// Weight of every collocation node, `(2π/M)^N`.
    pub fn quadrature_weight(&self) -> f64 {
        (2.0 * PI / self.points as f64).powi(self.dim as i32)
    }

    /// Total measure of the torus, `(2π)^N`.
    pub fn volume(&self) -> f64 {
        (2.0 * PI).powi(self.dim as i32)
    }

    /// Frequency stored at lexicographic position `idx` (first axis slowest).
    pub fn wavevector(&self, idx: usize) -> Wavevector {
        let mut k = [0i64; MAX_DIM];
        let mut rest = idx;
        for axis in (0..self.dim).rev() {
            k[axis] = (rest % self.modes) as i64 + self.min_frequency();
            rest /= self.modes;
        }
        k
    }

    pub fn index_of(&self, k: &[i64]) -> Option<usize> {
        if k.len() != self.dim {
            return None;
        }
        let mut idx = 0usize;
        for &ka in k {
            if ka < self.min_frequency() || ka > self.nyquist() {
                return None;
            }
            idx = idx * self.modes + (ka - self.min_frequency()) as usize;
        }
        Some(idx)
    }

    pub fn frequencies(&self) -> impl Iterator<Item = Wavevector> + '_ {
        (0..self.n_coeffs()).map(move |i| self.wavevector(i))
    }

    pub fn norm_sq(&self, k: &Wavevector) -> f64 {
        k[..self.dim].iter().map(|&x| (x * x) as f64).sum()
    }

    /// Symbol of `−Δ + 1` at every stored frequency, `|k|² + 1`.
    pub fn lambdas(&self) -> Vec<f64> {
        self.frequencies().map(|k| self.norm_sq(&k) + 1.0).collect()
    }

    /// Position of `−k`, with `−K/2` aliased onto the stored `K/2`.
    pub fn mirror_index(&self, idx: usize) -> usize {
        let k = self.wavevector(idx);
        let mut m = [0i64; MAX_DIM];
        for axis in 0..self.dim {
            m[axis] = if k[axis] == self.nyquist() {
                k[axis]
            } else {
                -k[axis]
            };
        }
        self.index_of(&m[..self.dim])
            .expect("mirror stays on lattice")
    }

    pub fn is_nyquist(&self, k: &Wavevector, axis: usize) -> bool {
        k[axis] == self.nyquist()
    }

    pub fn has_nyquist_component(&self, k: &Wavevector) -> bool {
        (0..self.dim).any(|a| self.is_nyquist(k, a))
    }

    /// Factor turning `|c_k|²` into its contribution to `‖u‖²_{L²}`.
    ///
    /// The Nyquist frequency represents `cos(K x / 2)` when `M > K`, whose mean
    /// square is one half.
    pub fn plancherel_weights(&self) -> Vec<f64> {
        let vol = self.volume();
        self.frequencies()
            .map(|k| {
                let mut w = vol;
                if self.points > self.modes {
                    for axis in 0..self.dim {
                        if self.is_nyquist(&k, axis) {
                            w *= 0.5;
                        }
                    }
                }
                w
            })
            .collect()
    }

    /// Coordinates of collocation node `j` (row-major, first axis slowest).
    pub fn collocation_point(&self, j: usize) -> Wavepoint {
        let h = 2.0 * PI / self.points as f64;
        let mut x = [0.0; MAX_DIM];
        let mut rest = j;
        for axis in (0..self.dim).rev() {
            x[axis] = (rest % self.points) as f64 * h;
            rest /= self.points;
        }
        x
    }
}

/// A point of the torus. Entries beyond the grid dimension are zero.
pub type Wavepoint = [f64; MAX_DIM];
