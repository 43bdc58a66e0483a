//! Reproducible finite-dimensional Brownian motion.
//!
//! Every sample index owns an independent ChaCha8 stream keyed by
//! `sha256(tag ‖ master_seed ‖ index)`, so a Monte Carlo sample is a pure
//! function of `(master_seed, index)` no matter which worker evaluates it.
//!
//! Stream-advance rule: increments are drawn step-major (all `d` components
//! of step 0, then step 1, ...). Normal number `n` of a stream is produced
//! by the Box–Muller pair `n / 2`, and pair `p` always consumes the 32-bit
//! words `4p .. 4p + 4`. A block that starts at step `s` therefore seeks to
//! word `4 ⌊s d / 2⌋` and reproduces the tail of a longer block exactly.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::spectral::{norm_lp, SpectralField};

const INCREMENT_TAG: &str = "brownian-increments";

/// Source of per-sample Brownian increments for a `d`-dimensional `W`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NoiseDriver {
    master_seed: u64,
    dim: usize,
}

impl NoiseDriver {
    pub fn new(master_seed: u64, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("d", "noise dimension must be at least 1"));
        }
        Ok(NoiseDriver { master_seed, dim })
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// An auxiliary Gaussian stream, independent of the increment streams
    /// and of every other `tag`.
    pub fn substream(&self, tag: &str, index: u64) -> GaussianStream {
        GaussianStream::keyed(tag, self.master_seed, index)
    }

    /// Increments of steps `0 .. n_steps` for one sample.
    pub fn sample_increments(
        &self,
        sample_index: u64,
        n_steps: usize,
        dt: f64,
    ) -> Result<BrownianIncrements> {
        self.sample_block(sample_index, 0, n_steps, dt)
    }

    /// Increments of steps `start .. start + n_steps` for one sample.
    pub fn sample_block(
        &self,
        sample_index: u64,
        start: usize,
        n_steps: usize,
        dt: f64,
    ) -> Result<BrownianIncrements> {
        if n_steps == 0 {
            return Err(Error::invalid("n_steps", "at least one step is required"));
        }
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::invalid(
                "dt",
                format!("time step {dt} must be positive"),
            ));
        }
        let mut stream = GaussianStream::keyed(INCREMENT_TAG, self.master_seed, sample_index);
        let first = start as u64 * self.dim as u64;
        stream.seek_normal(first);
        let scale = dt.sqrt();
        let data = (0..n_steps * self.dim)
            .map(|_| scale * stream.next_normal())
            .collect();
        Ok(BrownianIncrements {
            dim: self.dim,
            n_steps,
            dt,
            data,
        })
    }
}

/// Seekable standard normal stream (Box–Muller over ChaCha8).
#[derive(Debug, Clone)]
pub struct GaussianStream {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl GaussianStream {
    pub fn keyed(tag: &str, seed: u64, index: u64) -> Self {
        let mut h = Sha256::new();
        h.update(tag.as_bytes());
        h.update(seed.to_le_bytes());
        h.update(index.to_le_bytes());
        let key: [u8; 32] = h.finalize().into();
        GaussianStream {
            rng: ChaCha8Rng::from_seed(key),
            spare: None,
        }
    }

    /// Positions the stream so that the next call returns normal number `n`.
    pub fn seek_normal(&mut self, n: u64) {
        self.rng.set_word_pos(4 * (n / 2) as u128);
        self.spare = None;
        if n % 2 == 1 {
            let _ = self.next_normal();
        }
    }

    fn unit_open(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    fn unit_closed_open(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn next_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = self.unit_open();
        let u2 = self.unit_closed_open();
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (2.0 * PI * u2).sin_cos();
        self.spare = Some(r * s);
        r * c
    }

    pub fn normals(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.next_normal()).collect()
    }
}

/// A `d × n_steps` table of increments `ΔWⁱ_j ~ N(0, dt)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianIncrements {
    dim: usize,
    n_steps: usize,
    dt: f64,
    /// Step-major: entry `(i, j)` lives at `j * dim + i`.
    data: Vec<f64>,
}

impl BrownianIncrements {
    pub fn from_rows(dt: f64, rows: Vec<Vec<f64>>) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 || rows[0].is_empty() {
            return Err(Error::invalid("rows", "increment table is empty"));
        }
        let n_steps = rows[0].len();
        if rows.iter().any(|r| r.len() != n_steps) {
            return Err(Error::invalid("rows", "components have different lengths"));
        }
        if !(dt > 0.0) {
            return Err(Error::invalid("dt", "time step must be positive"));
        }
        let mut data = Vec::with_capacity(dim * n_steps);
        for j in 0..n_steps {
            for r in &rows {
                data.push(r[j]);
            }
        }
        Ok(BrownianIncrements {
            dim,
            n_steps,
            dt,
            data,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn horizon(&self) -> f64 {
        self.dt * self.n_steps as f64
    }

    pub fn get(&self, component: usize, step: usize) -> f64 {
        self.data[step * self.dim + component]
    }

    /// All components of one step.
    pub fn step(&self, step: usize) -> &[f64] {
        &self.data[step * self.dim..(step + 1) * self.dim]
    }

    pub fn component(&self, i: usize) -> Vec<f64> {
        (0..self.n_steps).map(|j| self.get(i, j)).collect()
    }

    /// `βⁱ(t_j)` for `j = 0 ..= n_steps`.
    pub fn path(&self, i: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_steps + 1);
        let mut b = 0.0;
        out.push(b);
        for j in 0..self.n_steps {
            b += self.get(i, j);
            out.push(b);
        }
        out
    }

    /// Appends the steps of `other`.
    pub fn concat(&self, other: &BrownianIncrements) -> Result<BrownianIncrements> {
        if other.dim != self.dim || other.dt != self.dt {
            return Err(Error::invalid(
                "other",
                "blocks differ in dimension or step",
            ));
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Ok(BrownianIncrements {
            dim: self.dim,
            n_steps: self.n_steps + other.n_steps,
            dt: self.dt,
            data,
        })
    }

    /// Steps `start .. start + len`.
    pub fn slice(&self, start: usize, len: usize) -> Result<BrownianIncrements> {
        if len == 0 || start + len > self.n_steps {
            return Err(Error::invalid(
                "len",
                format!("steps {start}..{} exceed {}", start + len, self.n_steps),
            ));
        }
        Ok(BrownianIncrements {
            dim: self.dim,
            n_steps: len,
            dt: self.dt,
            data: self.data[start * self.dim..(start + len) * self.dim].to_vec(),
        })
    }

    /// Increments of the same path on a grid `factor` times coarser.
    pub fn coarsen(&self, factor: usize) -> Result<BrownianIncrements> {
        if factor == 0 || !self.n_steps.is_multiple_of(factor) {
            return Err(Error::invalid(
                "factor",
                format!("{factor} does not divide {} steps", self.n_steps),
            ));
        }
        let n = self.n_steps / factor;
        let mut data = vec![0.0; n * self.dim];
        for j in 0..self.n_steps {
            for i in 0..self.dim {
                data[(j / factor) * self.dim + i] += self.get(i, j);
            }
        }
        Ok(BrownianIncrements {
            dim: self.dim,
            n_steps: n,
            dt: self.dt * factor as f64,
            data,
        })
    }

    /// `step,t,dW1,...,dWd`, one row per step, `t` the left endpoint.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("step,t");
        for i in 1..=self.dim {
            let _ = write!(s, ",dW{i}");
        }
        s.push('\n');
        for j in 0..self.n_steps {
            let _ = write!(s, "{j},{:?}", j as f64 * self.dt);
            for v in self.step(j) {
                let _ = write!(s, ",{v:?}");
            }
            s.push('\n');
        }
        s
    }
}

/// `(Σᵢ ‖fᵢ‖²_{L^p})^{1/2}`.
pub fn gamma_norm(fields: &[SpectralField], p: f64) -> Result<f64> {
    if fields.is_empty() {
        return Err(Error::invalid(
            "fields",
            "at least one component is required",
        ));
    }
    let grid = fields[0].grid();
    let mut s = 0.0;
    for f in fields {
        if f.grid() != grid {
            return Err(Error::GridMismatch(
                "gamma_norm components differ in grid".into(),
            ));
        }
        s += norm_lp(f, p)?.powi(2);
    }
    Ok(s.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::TorusGrid;

    fn mean_var(x: &[f64]) -> (f64, f64) {
        let n = x.len() as f64;
        let m = x.iter().sum::<f64>() / n;
        let v = x.iter().map(|a| (a - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, v)
    }

    #[test]
    fn deterministic_per_index() {
        let drv = NoiseDriver::new(42, 3).unwrap();
        let a = drv.sample_increments(7, 100, 0.01).unwrap();
        let b = drv.sample_increments(7, 100, 0.01).unwrap();
        assert_eq!(a, b);
        let c = drv.sample_increments(8, 100, 0.01).unwrap();
        assert_ne!(a, c);
        let other = NoiseDriver::new(43, 3).unwrap();
        assert_ne!(a, other.sample_increments(7, 100, 0.01).unwrap());
    }

    #[test]
    fn gaussian_moments() {
        let n = 1 << 16;
        let dt = 0.003;
        let drv = NoiseDriver::new(2024, 1).unwrap();
        let x = drv.sample_increments(0, n, dt).unwrap().component(0);
        let (m, v) = mean_var(&x);
        assert!(m.abs() < 4.0 * dt.sqrt() / (n as f64).sqrt());
        assert!((v / dt - 1.0).abs() < 0.05);
    }

    #[test]
    fn streams_are_uncorrelated() {
        let n = 1 << 16;
        let drv = NoiseDriver::new(5, 1).unwrap();
        let a = drv.sample_increments(0, n, 1.0).unwrap().component(0);
        let b = drv.sample_increments(1, n, 1.0).unwrap().component(0);
        let r = a.iter().zip(&b).map(|(x, y)| x * y).sum::<f64>()
            / (a.iter().map(|x| x * x).sum::<f64>() * b.iter().map(|y| y * y).sum::<f64>()).sqrt();
        assert!(r.abs() < 4.0 / (n as f64).sqrt());
    }

    #[test]
    fn chunks_concatenate_exactly() {
        for d in 1..=3 {
            let drv = NoiseDriver::new(11, d).unwrap();
            let whole = drv.sample_increments(3, 101, 0.5).unwrap();
            for split in [1, 2, 37, 50, 51, 100] {
                let a = drv.sample_block(3, 0, split, 0.5).unwrap();
                let b = drv.sample_block(3, split, 101 - split, 0.5).unwrap();
                assert_eq!(a.concat(&b).unwrap(), whole, "d={d} split={split}");
                assert_eq!(whole.slice(split, 101 - split).unwrap(), b);
            }
        }
    }

    #[test]
    fn increments_scale_with_sqrt_dt() {
        let drv = NoiseDriver::new(9, 2).unwrap();
        let a = drv.sample_increments(0, 64, 1.0).unwrap();
        let b = drv.sample_increments(0, 64, 0.25).unwrap();
        for j in 0..64 {
            for i in 0..2 {
                assert!((b.get(i, j) - 0.5 * a.get(i, j)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn coarsening_sums_and_keeps_endpoint() {
        let drv = NoiseDriver::new(1, 2).unwrap();
        let fine = drv.sample_increments(0, 12, 0.1).unwrap();
        let coarse = fine.coarsen(4).unwrap();
        assert_eq!(coarse.n_steps(), 3);
        assert!((coarse.dt() - 0.4).abs() < 1e-15);
        for i in 0..2 {
            let pf = fine.path(i);
            let pc = coarse.path(i);
            for j in 0..=3 {
                assert!((pf[4 * j] - pc[j]).abs() < 1e-14);
            }
        }
        assert!(fine.coarsen(5).is_err());
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(NoiseDriver::new(0, 0).is_err());
        let drv = NoiseDriver::new(0, 1).unwrap();
        assert!(drv.sample_increments(0, 0, 0.1).is_err());
        assert!(drv.sample_increments(0, 5, 0.0).is_err());
        assert!(drv.sample_increments(0, 5, -1.0).is_err());
    }

    #[test]
    fn csv_dump_has_one_row_per_step() {
        let drv = NoiseDriver::new(0, 2).unwrap();
        let inc = drv.sample_increments(0, 5, 0.1).unwrap();
        let csv = inc.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "step,t,dW1,dW2");
        assert_eq!(lines.len(), 6);
        let v: f64 = lines[3].split(',').nth(3).unwrap().parse().unwrap();
        assert_eq!(v, inc.get(1, 2));
    }

    #[test]
    fn gamma_norm_examples() {
        let g = TorusGrid::new(1, 8, 16).unwrap();
        let z = SpectralField::zeros(g);
        assert_eq!(gamma_norm(&[z.clone(), z], 3.0).unwrap(), 0.0);
        let u = SpectralField::from_fn(g, |x| x[0].sin() + 0.5);
        let single = gamma_norm(std::slice::from_ref(&u), 3.0).unwrap();
        assert!((single - norm_lp(&u, 3.0).unwrap()).abs() < 1e-14);
        let c1 = SpectralField::constant(g, 1.5);
        let c2 = SpectralField::constant(g, -2.0);
        let expected = ((1.5f64.powi(2) + 4.0) * 2.0 * PI).sqrt();
        assert!((gamma_norm(&[c1, c2], 2.0).unwrap() - expected).abs() < 1e-12);
        assert!(gamma_norm(&[], 2.0).is_err());
    }
}
