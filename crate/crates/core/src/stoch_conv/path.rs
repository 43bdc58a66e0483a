use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{SpectralField, TorusGrid};

/// Fields (or `width`-tuples of fields) on the uniform time grid
/// `t_n = n dt`, `n = 0 .. len`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathOfFields {
    dt: f64,
    grid: TorusGrid,
    width: usize,
    /// Time-major: component `i` at time `n` is `data[n * width + i]`.
    data: Vec<SpectralField>,
}

impl PathOfFields {
    pub fn from_fields(dt: f64, fields: Vec<SpectralField>) -> Result<Self> {
        Self::build(dt, 1, fields)
    }

    pub fn from_tuples(dt: f64, tuples: Vec<Vec<SpectralField>>) -> Result<Self> {
        let width = tuples.first().map_or(0, Vec::len);
        if tuples.iter().any(|t| t.len() != width) {
            return Err(Error::invalid("tuples", "tuples differ in length"));
        }
        Self::build(dt, width, tuples.into_iter().flatten().collect())
    }

    /// The same tuple at `n_times` consecutive times.
    pub fn constant(dt: f64, n_times: usize, tuple: &[SpectralField]) -> Result<Self> {
        let mut data = Vec::with_capacity(n_times * tuple.len());
        for _ in 0..n_times {
            data.extend_from_slice(tuple);
        }
        Self::build(dt, tuple.len(), data)
    }

    pub(crate) fn from_coeff_rows(
        dt: f64,
        grid: TorusGrid,
        rows: Vec<Vec<Complex64>>,
    ) -> Result<Self> {
        let data = rows
            .into_iter()
            .map(|c| SpectralField::from_coeffs(grid, c))
            .collect::<Result<Vec<_>>>()?;
        Self::build(dt, 1, data)
    }

    fn build(dt: f64, width: usize, data: Vec<SpectralField>) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::invalid(
                "dt",
                format!("time step {dt} must be positive"),
            ));
        }
        if width == 0 || data.is_empty() {
            return Err(Error::invalid("path", "a path needs at least one field"));
        }
        let grid = *data[0].grid();
        if data.iter().any(|f| *f.grid() != grid) {
            return Err(Error::GridMismatch(
                "path fields live on different grids".into(),
            ));
        }
        Ok(PathOfFields {
            dt,
            grid,
            width,
            data,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Number of time points.
    pub fn len(&self) -> usize {
        self.data.len() / self.width
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|n| self.time(n)).collect()
    }

    /// First component at time index `n`.
    pub fn at(&self, n: usize) -> &SpectralField {
        &self.data[n * self.width]
    }

    pub fn tuple(&self, n: usize) -> &[SpectralField] {
        &self.data[n * self.width..(n + 1) * self.width]
    }

    pub fn last(&self) -> &SpectralField {
        self.at(self.len() - 1)
    }

    pub fn fields(&self) -> impl Iterator<Item = &SpectralField> {
        self.data.iter().step_by(self.width)
    }

    pub fn into_fields(self) -> Vec<SpectralField> {
        self.data
    }

    /// Keeps every `factor`-th time point.
    pub fn subsample(&self, factor: usize) -> Result<PathOfFields> {
        if factor == 0 {
            return Err(Error::invalid("factor", "must be positive"));
        }
        let mut data = Vec::new();
        for n in (0..self.len()).step_by(factor) {
            data.extend_from_slice(self.tuple(n));
        }
        Self::build(self.dt * factor as f64, self.width, data)
    }

    /// Pointwise `self − other` on width-one paths.
    pub fn sub(&self, other: &PathOfFields) -> Result<PathOfFields> {
        self.check_compatible(other)?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Self::build(self.dt, self.width, data)
    }

    pub fn scaled(&self, a: f64) -> PathOfFields {
        PathOfFields {
            dt: self.dt,
            grid: self.grid,
            width: self.width,
            data: self.data.iter().map(|f| f.clone().scaled(a)).collect(),
        }
    }

    /// Trapezoid approximation of `∫₀ᵀ ‖u(t)‖²_{L²} dt` (first component).
    pub fn l2_space_time_sq(&self) -> f64 {
        let n = self.len();
        if n == 1 {
            return 0.0;
        }
        let mut s = 0.0;
        for (j, f) in self.fields().enumerate() {
            let w = if j == 0 || j == n - 1 { 0.5 } else { 1.0 };
            s += w * f.l2_norm_sq();
        }
        s * self.dt
    }

    /// `max_n ‖u(t_n)‖_{L²}` (first component).
    pub fn sup_l2(&self) -> f64 {
        self.fields()
            .map(|f| f.l2_norm_sq().sqrt())
            .fold(0.0, f64::max)
    }

    pub(crate) fn check_compatible(&self, other: &PathOfFields) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch("paths live on different grids".into()));
        }
        if self.len() != other.len() || self.width != other.width {
            return Err(Error::SizeMismatch {
                expected: self.data.len(),
                actual: other.data.len(),
            });
        }
        if (self.dt - other.dt).abs() > 1e-12 * self.dt {
            return Err(Error::invalid("dt", "paths use different time steps"));
        }
        Ok(())
    }

    /// `t[,component],k1[,k2],re,im`; the component column appears only
    /// for tuple paths.
    pub fn to_csv(&self) -> String {
        let dim = self.grid.dim();
        let mut s = String::from("t");
        if self.width > 1 {
            s.push_str(",component");
        }
        for a in 1..=dim {
            let _ = write!(s, ",k{a}");
        }
        s.push_str(",re,im\n");
        for n in 0..self.len() {
            for (i, f) in self.tuple(n).iter().enumerate() {
                for (k, c) in self.grid.frequencies().zip(f.coeffs()) {
                    let _ = write!(s, "{:?}", self.time(n));
                    if self.width > 1 {
                        let _ = write!(s, ",{i}");
                    }
                    for ka in &k[..dim] {
                        let _ = write!(s, ",{ka}");
                    }
                    let _ = writeln!(s, ",{:?},{:?}", c.re, c.im);
                }
            }
        }
        s
    }
}
