use std::ops::{Add, AddAssign, MulAssign, Sub, SubAssign};

use num_complex::Complex64;

use super::fft::fft_nd;
use super::grid::{TorusGrid, Wavepoint, MAX_DIM};
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// A real function on the torus stored as truncated Fourier coefficients.
///
/// `u(x) = Σ_k c_k e^{i k·x}`, coefficients in lexicographic lattice order.
/// When `M > K` a Nyquist coefficient stands for the split pair `±K/2`, so the
/// represented function stays real on every collocation grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: TorusGrid,
    coeffs: Vec<Complex64>,
}

/// Forward and inverse bin maps per axis: `(bin, weight)` for every retained frequency.
fn axis_bins(grid: &TorusGrid, inverse: bool) -> Vec<Vec<(usize, f64)>> {
    let k_half = grid.nyquist();
    let m = grid.points() as i64;
    (grid.min_frequency()..=k_half)
        .map(|k| {
            if k == k_half && grid.points() > grid.modes() {
                let w = if inverse { 0.5 } else { 1.0 };
                vec![(k_half as usize, w), ((m - k_half) as usize, w)]
            } else {
                vec![(k.rem_euclid(m) as usize, 1.0)]
            }
        })
        .collect()
}

impl SpectralField {
    pub fn zeros(grid: TorusGrid) -> Self {
        SpectralField {
            grid,
            coeffs: vec![ZERO; grid.n_coeffs()],
        }
    }

    pub fn constant(grid: TorusGrid, c: f64) -> Self {
        let mut f = Self::zeros(grid);
        let zero = grid.index_of(&[0; MAX_DIM][..grid.dim()]).unwrap();
        f.coeffs[zero] = Complex64::new(c, 0.0);
        f
    }

    pub fn from_coeffs(grid: TorusGrid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.n_coeffs() {
            return Err(Error::SizeMismatch {
                expected: grid.n_coeffs(),
                actual: coeffs.len(),
            });
        }
        Ok(SpectralField { grid, coeffs })
    }

    /// Real field `a e^{ik·x} + conj(a) e^{−ik·x}`.
    pub fn single_mode(grid: TorusGrid, k: &[i64], amplitude: Complex64) -> Result<Self> {
        let idx = grid
            .index_of(k)
            .ok_or_else(|| Error::invalid("k", format!("{k:?} is not on the lattice")))?;
        let mut f = Self::zeros(grid);
        let mirror = grid.mirror_index(idx);
        if mirror == idx {
            f.coeffs[idx] = Complex64::new(amplitude.re, 0.0);
        } else {
            f.coeffs[idx] = amplitude;
            f.coeffs[mirror] = amplitude.conj();
        }
        Ok(f)
    }

    /// Samples `f` on the collocation grid and transforms.
    pub fn from_fn<F: Fn(&Wavepoint) -> f64>(grid: TorusGrid, f: F) -> Self {
        let values: Vec<f64> = (0..grid.n_points())
            .map(|j| f(&grid.collocation_point(j)))
            .collect();
        transform(&grid, &values).expect("values sized to grid")
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn coeff(&self, k: &[i64]) -> Option<Complex64> {
        self.grid.index_of(k).map(|i| self.coeffs[i])
    }

    /// Values on the `M^N` collocation grid.
    pub fn values(&self) -> Vec<f64> {
        inverse_transform(self)
    }

    /// `‖u‖²_{L²}` from the coefficients (Plancherel).
    pub fn l2_norm_sq(&self) -> f64 {
        self.grid
            .plancherel_weights()
            .iter()
            .zip(&self.coeffs)
            .map(|(w, c)| w * c.norm_sqr())
            .sum()
    }

    /// `∫ u v dx` from the coefficients.
    pub fn inner(&self, other: &SpectralField) -> f64 {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        self.grid
            .plancherel_weights()
            .iter()
            .zip(self.coeffs.iter().zip(&other.coeffs))
            .map(|(w, (a, b))| w * (a * b.conj()).re)
            .sum()
    }

    /// Largest violation of `c(−k) = conj(c(k))`.
    pub fn hermitian_defect(&self) -> f64 {
        (0..self.coeffs.len())
            .map(|i| {
                let m = self.grid.mirror_index(i);
                (self.coeffs[m] - self.coeffs[i].conj()).norm()
            })
            .fold(0.0, f64::max)
    }

    /// Drops every frequency with a Nyquist component.
    pub fn zero_nyquist(&mut self) {
        for i in 0..self.coeffs.len() {
            if self.grid.has_nyquist_component(&self.grid.wavevector(i)) {
                self.coeffs[i] = ZERO;
            }
        }
    }

    pub fn scaled(mut self, a: f64) -> Self {
        self *= a;
        self
    }

    /// `self += a * other`.
    pub fn axpy(&mut self, a: f64, other: &SpectralField) {
        assert_eq!(self.grid, other.grid, "grid mismatch");
        for (x, y) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *x += y * a;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs
            .iter()
            .all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Copy of this field on another grid: shared frequencies are kept,
    /// the rest are zero.
    pub fn resample(&self, target: TorusGrid) -> Result<SpectralField> {
        if target.dim() != self.grid.dim() {
            return Err(Error::GridMismatch(format!(
                "cannot resample a {}-d field onto a {}-d grid",
                self.grid.dim(),
                target.dim()
            )));
        }
        let mut out = SpectralField::zeros(target);
        let dim = self.grid.dim();
        for (i, c) in self.coeffs.iter().enumerate() {
            let k = self.grid.wavevector(i);
            if self.grid.has_nyquist_component(&k) {
                continue;
            }
            if let Some(j) = target.index_of(&k[..dim]) {
                if !target.has_nyquist_component(&k) {
                    out.coeffs[j] = *c;
                }
            }
        }
        Ok(out)
    }
}

impl AddAssign<&SpectralField> for SpectralField {
    fn add_assign(&mut self, rhs: &SpectralField) {
        self.axpy(1.0, rhs);
    }
}

impl SubAssign<&SpectralField> for SpectralField {
    fn sub_assign(&mut self, rhs: &SpectralField) {
        self.axpy(-1.0, rhs);
    }
}

impl MulAssign<f64> for SpectralField {
    fn mul_assign(&mut self, a: f64) {
        for c in &mut self.coeffs {
            *c *= a;
        }
    }
}

impl Add for &SpectralField {
    type Output = SpectralField;
    fn add(self, rhs: &SpectralField) -> SpectralField {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Sub for &SpectralField {
    type Output = SpectralField;
    fn sub(self, rhs: &SpectralField) -> SpectralField {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

/// Collocation values to retained Fourier coefficients.
pub fn transform(grid: &TorusGrid, values: &[f64]) -> Result<SpectralField> {
    if values.len() != grid.n_points() {
        return Err(Error::SizeMismatch {
            expected: grid.n_points(),
            actual: values.len(),
        });
    }
    let m = grid.points();
    let mut spectrum: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft_nd(&mut spectrum, m, grid.dim(), true);
    let scale = 1.0 / grid.n_points() as f64;
    let bins = axis_bins(grid, false);
    let k = grid.modes();
    let mut coeffs = vec![ZERO; grid.n_coeffs()];
    match grid.dim() {
        1 => {
            for (a, c) in coeffs.iter_mut().enumerate() {
                *c = bins[a]
                    .iter()
                    .map(|&(b, w)| spectrum[b] * w)
                    .sum::<Complex64>()
                    * scale;
            }
        }
        _ => {
            for a in 0..k {
                for b in 0..k {
                    let mut s = ZERO;
                    for &(ba, wa) in &bins[a] {
                        for &(bb, wb) in &bins[b] {
                            s += spectrum[ba * m + bb] * (wa * wb);
                        }
                    }
                    coeffs[a * k + b] = s * scale;
                }
            }
        }
    }
    Ok(SpectralField {
        grid: *grid,
        coeffs,
    })
}

/// Retained Fourier coefficients to collocation values.
pub fn inverse_transform(field: &SpectralField) -> Vec<f64> {
    let grid = field.grid;
    let m = grid.points();
    let k = grid.modes();
    let bins = axis_bins(&grid, true);
    let mut spectrum = vec![ZERO; grid.n_points()];
    match grid.dim() {
        1 => {
            for (a, c) in field.coeffs.iter().enumerate() {
                for &(b, w) in &bins[a] {
                    spectrum[b] += c * w;
                }
            }
        }
        _ => {
            for a in 0..k {
                for b in 0..k {
                    let c = field.coeffs[a * k + b];
                    for &(ba, wa) in &bins[a] {
                        for &(bb, wb) in &bins[b] {
                            spectrum[ba * m + bb] += c * (wa * wb);
                        }
                    }
                }
            }
        }
    }
    fft_nd(&mut spectrum, m, grid.dim(), false);
    spectrum.into_iter().map(|z| z.re).collect()
}
