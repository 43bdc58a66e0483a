use num_complex::Complex64;

use super::field::SpectralField;
use super::grid::{TorusGrid, Wavevector};
use crate::error::{Error, Result};

/// A Fourier symbol tabulated on the lattice of one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Multiplier {
    grid: TorusGrid,
    symbol: Vec<Complex64>,
}

impl Multiplier {
    pub fn from_fn<F: Fn(&Wavevector) -> Complex64>(grid: TorusGrid, f: F) -> Self {
        Multiplier {
            grid,
            symbol: grid.frequencies().map(|k| f(&k)).collect(),
        }
    }

    /// Real symbol depending only on `λ = |k|² + 1`.
    pub fn radial<F: Fn(f64) -> f64>(grid: TorusGrid, f: F) -> Self {
        Multiplier::from_fn(grid, |k| Complex64::new(f(grid.norm_sq(k) + 1.0), 0.0))
    }

    pub fn identity(grid: TorusGrid) -> Self {
        Multiplier::radial(grid, |_| 1.0)
    }

    /// `S_t = e^{t(Δ−1)}`, symbol `exp(−t(|k|²+1))`.
    pub fn semigroup(grid: TorusGrid, t: f64) -> Result<Self> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::invalid(
                "t",
                format!("semigroup time {t} must be ≥ 0"),
            ));
        }
        Ok(Multiplier::radial(grid, |lambda| (-t * lambda).exp()))
    }

    /// `(−Δ+1)^{δ/2}`, symbol `(|k|²+1)^{δ/2}`, evaluated in log space.
    pub fn frac_power(grid: TorusGrid, delta: f64) -> Result<Self> {
        if !delta.is_finite() {
            return Err(Error::invalid(
                "delta",
                "fractional exponent must be finite",
            ));
        }
        Ok(Multiplier::radial(grid, |lambda| {
            (0.5 * delta * lambda.ln()).exp()
        }))
    }

    /// `(−Δ+1)^{δ/2} S_t`, symbol `exp(δ/2 · ln λ − tλ)`.
    pub fn frac_semigroup(grid: TorusGrid, delta: f64, t: f64) -> Result<Self> {
        if !delta.is_finite() {
            return Err(Error::invalid(
                "delta",
                "fractional exponent must be finite",
            ));
        }
        if !(t >= 0.0) || !t.is_finite() {
            return Err(Error::invalid(
                "t",
                format!("semigroup time {t} must be ≥ 0"),
            ));
        }
        Ok(Multiplier::radial(grid, |lambda| {
            (0.5 * delta * lambda.ln() - t * lambda).exp()
        }))
    }

    /// `∂^β` with symbol `Π (i k_a)^{β_a}`; Nyquist frequencies of every
    /// differentiated axis are zeroed.
    pub fn derivative(grid: TorusGrid, beta: &[u32]) -> Result<Self> {
        if beta.len() != grid.dim() {
            return Err(Error::SizeMismatch {
                expected: grid.dim(),
                actual: beta.len(),
            });
        }
        Ok(Multiplier::from_fn(grid, |k| {
            let mut s = Complex64::new(1.0, 0.0);
            for (axis, &order) in beta.iter().enumerate() {
                if order == 0 {
                    continue;
                }
                if grid.is_nyquist(k, axis) {
                    return Complex64::new(0.0, 0.0);
                }
                s *= Complex64::new(0.0, k[axis] as f64).powu(order);
            }
            s
        }))
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn symbol(&self) -> &[Complex64] {
        &self.symbol
    }

    pub fn value_at(&self, k: &[i64]) -> Option<Complex64> {
        self.grid.index_of(k).map(|i| self.symbol[i])
    }

    pub fn compose(&self, other: &Multiplier) -> Result<Multiplier> {
        self.check_grid(&other.grid)?;
        Ok(Multiplier {
            grid: self.grid,
            symbol: self
                .symbol
                .iter()
                .zip(&other.symbol)
                .map(|(a, b)| a * b)
                .collect(),
        })
    }

    pub fn apply(&self, field: &SpectralField) -> Result<SpectralField> {
        let mut out = field.clone();
        self.apply_in_place(&mut out)?;
        Ok(out)
    }

    pub fn apply_in_place(&self, field: &mut SpectralField) -> Result<()> {
        self.check_grid(field.grid())?;
        for (c, s) in field.coeffs_mut().iter_mut().zip(&self.symbol) {
            *c *= s;
        }
        Ok(())
    }

    pub fn sup_abs(&self) -> f64 {
        self.symbol.iter().map(|s| s.norm()).fold(0.0, f64::max)
    }

    /// Largest violation of `symbol(−k) = conj(symbol(k))`.
    pub fn hermitian_defect(&self) -> f64 {
        (0..self.symbol.len())
            .map(|i| (self.symbol[self.grid.mirror_index(i)] - self.symbol[i].conj()).norm())
            .fold(0.0, f64::max)
    }

    fn check_grid(&self, other: &TorusGrid) -> Result<()> {
        if self.grid != *other {
            return Err(Error::GridMismatch(format!(
                "multiplier on {:?} applied to field on {:?}",
                self.grid, other
            )));
        }
        Ok(())
    }
}

/// A vector-to-scalar symbol, one component per spatial axis.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorMultiplier {
    components: Vec<Multiplier>,
}

impl VectorMultiplier {
    /// `(−Δ+1)^{−1/2} div`: component `j` has symbol `i k_j (|k|²+1)^{−1/2}`.
    pub fn inv_sqrt_div(grid: TorusGrid) -> Self {
        let components = (0..grid.dim())
            .map(|axis| {
                Multiplier::from_fn(grid, |k| {
                    if grid.is_nyquist(k, axis) {
                        return Complex64::new(0.0, 0.0);
                    }
                    let lambda = grid.norm_sq(k) + 1.0;
                    Complex64::new(0.0, k[axis] as f64 / lambda.sqrt())
                })
            })
            .collect();
        VectorMultiplier { components }
    }

    pub fn components(&self) -> &[Multiplier] {
        &self.components
    }

    pub fn apply(&self, fields: &[SpectralField]) -> Result<SpectralField> {
        if fields.len() != self.components.len() {
            return Err(Error::SizeMismatch {
                expected: self.components.len(),
                actual: fields.len(),
            });
        }
        let grid = *self.components[0].grid();
        let mut out = SpectralField::zeros(grid);
        for (m, f) in self.components.iter().zip(fields) {
            let g = m.apply(f)?;
            out += &g;
        }
        Ok(out)
    }
}

/// `max_k (|k|²+1)^δ e^{−t(|k|²+1)}` over the lattice.
pub fn analytic_lattice_sup(grid: &TorusGrid, delta: f64, t: f64) -> f64 {
    grid.lambdas()
        .into_iter()
        .map(|l| (delta * l.ln() - t * l).exp())
        .fold(0.0, f64::max)
}

/// `sup_{λ ≥ 1} λ^δ e^{−tλ}`: `(δ/t)^δ e^{−δ}` when `t ≤ δ`, otherwise `e^{−t}`.
pub fn analytic_envelope(delta: f64, t: f64) -> f64 {
    if t <= delta {
        (delta * (delta / t).ln() - delta).exp()
    } else {
        (-t).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid1() -> TorusGrid {
        TorusGrid::new(1, 16, 32).unwrap()
    }

    fn smooth(g: TorusGrid) -> SpectralField {
        SpectralField::from_fn(g, |x| (x[0].sin()).exp() + 0.3 * (3.0 * x[0]).cos())
    }

    #[test]
    fn semigroup_at_zero_is_identity() {
        let s = Multiplier::semigroup(grid1(), 0.0).unwrap();
        assert!(s
            .symbol()
            .iter()
            .all(|c| (c - Complex64::new(1.0, 0.0)).norm() == 0.0));
        assert!(Multiplier::semigroup(grid1(), -1.0).is_err());
    }

    #[test]
    fn semigroup_scales_constant_and_single_mode() {
        let g = grid1();
        let c = SpectralField::constant(g, 2.0);
        let out = Multiplier::semigroup(g, 1.0).unwrap().apply(&c).unwrap();
        assert!((out.coeff(&[0]).unwrap().re - 2.0 * (-1.0f64).exp()).abs() < 1e-15);
        let mode = SpectralField::single_mode(g, &[2], Complex64::new(1.0, 0.0)).unwrap();
        let out = Multiplier::semigroup(g, 0.1).unwrap().apply(&mode).unwrap();
        // exp(−0.1 · (4 + 1))
        assert!((out.coeff(&[2]).unwrap().re - (-0.5f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn frac_power_values() {
        let g = grid1();
        let p = Multiplier::frac_power(g, 0.0).unwrap();
        assert!(p.symbol().iter().all(|c| (c.re - 1.0).abs() < 1e-15));
        let p = Multiplier::frac_power(g, 1.0).unwrap();
        assert!((p.value_at(&[1]).unwrap().re - 2f64.sqrt()).abs() < 1e-15);
        assert!((p.value_at(&[0]).unwrap().re - 1.0).abs() < 1e-15);
        assert!(Multiplier::frac_power(g, f64::NAN).is_err());
    }

    #[test]
    fn semigroup_law_and_inverse_powers() {
        let g = grid1();
        let u = smooth(g);
        let a = Multiplier::semigroup(g, 0.3).unwrap();
        let b = Multiplier::semigroup(g, 0.45).unwrap();
        let ab = Multiplier::semigroup(g, 0.75).unwrap();
        let lhs = a.apply(&b.apply(&u).unwrap()).unwrap();
        let rhs = ab.apply(&u).unwrap();
        assert!((&lhs - &rhs).l2_norm_sq().sqrt() <= 1e-12 * rhs.l2_norm_sq().sqrt());
        let p = Multiplier::frac_power(g, 0.7).unwrap();
        let q = Multiplier::frac_power(g, -0.7).unwrap();
        let back = p.apply(&q.apply(&u).unwrap()).unwrap();
        assert!((&back - &u).l2_norm_sq().sqrt() <= 1e-12 * u.l2_norm_sq().sqrt());
    }

    #[test]
    fn inv_sqrt_div_examples() {
        let g = TorusGrid::new(1, 8, 16).unwrap();
        let d = VectorMultiplier::inv_sqrt_div(g);
        let c = SpectralField::constant(g, 4.0);
        assert!(d.apply(std::slice::from_ref(&c)).unwrap().l2_norm_sq() == 0.0);
        let mut f = SpectralField::zeros(g);
        f.coeffs_mut()[g.index_of(&[1]).unwrap()] = Complex64::new(1.0, 0.0);
        let out = d.apply(&[f]).unwrap();
        let v = out.coeff(&[1]).unwrap();
        assert!((v - Complex64::new(0.0, 1.0 / 2f64.sqrt())).norm() < 1e-15);
        assert!(d.apply(&[c.clone(), c]).is_err());
    }

    #[test]
    fn inv_sqrt_div_of_gradient() {
        let g = TorusGrid::new(2, 8, 16).unwrap();
        let phi = SpectralField::single_mode(g, &[2, 1], Complex64::new(0.3, -0.4)).unwrap();
        let grad: Vec<SpectralField> = (0..2)
            .map(|a| {
                let mut beta = [0u32; 2];
                beta[a] = 1;
                Multiplier::derivative(g, &beta)
                    .unwrap()
                    .apply(&phi)
                    .unwrap()
            })
            .collect();
        let out = VectorMultiplier::inv_sqrt_div(g).apply(&grad).unwrap();
        let ksq = 5.0f64;
        let expected = ksq / (ksq + 1.0).sqrt() * 0.5;
        assert!((out.coeff(&[2, 1]).unwrap().norm() - expected).abs() < 1e-14);
    }

    #[test]
    fn symbols_are_hermitian() {
        let g = TorusGrid::new(2, 8, 8).unwrap();
        assert!(
            Multiplier::frac_semigroup(g, 0.4, 0.2)
                .unwrap()
                .hermitian_defect()
                == 0.0
        );
        assert!(
            Multiplier::derivative(g, &[1, 2])
                .unwrap()
                .hermitian_defect()
                < 1e-15
        );
        for c in VectorMultiplier::inv_sqrt_div(g).components() {
            assert!(c.hermitian_defect() < 1e-15);
            assert!(c.sup_abs() <= 1.0);
        }
    }

    #[test]
    fn grid_mismatch_is_reported() {
        let s = Multiplier::semigroup(grid1(), 0.1).unwrap();
        let other = SpectralField::zeros(TorusGrid::new(1, 8, 8).unwrap());
        assert!(matches!(s.apply(&other), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn analytic_envelope_dominates_lattice() {
        let g = TorusGrid::new(1, 64, 64).unwrap();
        for &d in &[0.1, 0.3, 0.5, 0.7, 0.9] {
            for i in 0..20 {
                let t = 10f64.powf(-4.0 + 4.0 * i as f64 / 19.0);
                assert!(analytic_lattice_sup(&g, d, t) <= analytic_envelope(d, t));
            }
        }
    }
}
