use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::noise::NoiseDriver;
use crate::spectral::{SpectralField, TorusGrid};

/// A scalar nonlinearity chosen from a fixed catalog.
#[derive(Debug, Clone, PartialEq)]
pub enum ScalarFn {
    Identity,
    /// `amplitude · sin(frequency · ξ)`
    Sin {
        amplitude: f64,
        frequency: f64,
    },
    /// `amplitude · cos(frequency · ξ)`
    Cos {
        amplitude: f64,
        frequency: f64,
    },
    /// `c₀ + c₁ ξ + c₂ ξ² + …`
    Polynomial(Vec<f64>),
    Constant(f64),
}

impl ScalarFn {
    pub const CATALOG: [&'static str; 5] = ["identity", "sin", "cos", "polynomial", "constant"];

    pub fn sin() -> Self {
        ScalarFn::Sin {
            amplitude: 1.0,
            frequency: 1.0,
        }
    }

    pub fn cos() -> Self {
        ScalarFn::Cos {
            amplitude: 1.0,
            frequency: 1.0,
        }
    }

    /// Looks up `name` in the catalog. `sin`/`cos` take optional
    /// `[amplitude, frequency]`, `polynomial` its coefficients in increasing
    /// degree, `constant` a single value.
    pub fn from_catalog(name: &str, coeffs: &[f64]) -> Result<Self> {
        let bad = |msg: String| Error::Config {
            field: name.to_string(),
            message: msg,
        };
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(bad("coefficients must be finite".into()));
        }
        let trig = |coeffs: &[f64]| -> Result<(f64, f64)> {
            match coeffs {
                [] => Ok((1.0, 1.0)),
                [a] => Ok((*a, 1.0)),
                [a, w] => Ok((*a, *w)),
                _ => Err(bad(format!(
                    "expected at most 2 coefficients, got {}",
                    coeffs.len()
                ))),
            }
        };
        match name {
            "identity" if coeffs.is_empty() => Ok(ScalarFn::Identity),
            "identity" => Err(bad("identity takes no coefficients".into())),
            "sin" => trig(coeffs).map(|(amplitude, frequency)| ScalarFn::Sin {
                amplitude,
                frequency,
            }),
            "cos" => trig(coeffs).map(|(amplitude, frequency)| ScalarFn::Cos {
                amplitude,
                frequency,
            }),
            "polynomial" if !coeffs.is_empty() => Ok(ScalarFn::Polynomial(coeffs.to_vec())),
            "polynomial" => Err(bad("polynomial needs at least one coefficient".into())),
            "constant" => match coeffs {
                [c] => Ok(ScalarFn::Constant(*c)),
                _ => Err(bad("constant takes exactly one coefficient".into())),
            },
            other => Err(bad(format!(
                "unknown function `{other}`; choose one of {}",
                Self::CATALOG.join(", ")
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ScalarFn::Identity => "identity",
            ScalarFn::Sin { .. } => "sin",
            ScalarFn::Cos { .. } => "cos",
            ScalarFn::Polynomial(_) => "polynomial",
            ScalarFn::Constant(_) => "constant",
        }
    }

    pub fn coeffs(&self) -> Vec<f64> {
        match self {
            ScalarFn::Identity => vec![],
            ScalarFn::Sin {
                amplitude,
                frequency,
            }
            | ScalarFn::Cos {
                amplitude,
                frequency,
            } => vec![*amplitude, *frequency],
            ScalarFn::Polynomial(c) => c.clone(),
            ScalarFn::Constant(c) => vec![*c],
        }
    }

    pub fn eval(&self, xi: f64) -> f64 {
        match self {
            ScalarFn::Identity => xi,
            ScalarFn::Sin {
                amplitude,
                frequency,
            } => amplitude * (frequency * xi).sin(),
            ScalarFn::Cos {
                amplitude,
                frequency,
            } => amplitude * (frequency * xi).cos(),
            ScalarFn::Polynomial(c) => c.iter().rev().fold(0.0, |acc, a| acc * xi + a),
            ScalarFn::Constant(c) => *c,
        }
    }

    /// True when the value does not depend on `ξ`.
    pub fn is_constant(&self) -> bool {
        match self {
            ScalarFn::Constant(_) => true,
            ScalarFn::Polynomial(c) => c.iter().skip(1).all(|a| *a == 0.0),
            ScalarFn::Sin { amplitude, .. } | ScalarFn::Cos { amplitude, .. } => *amplitude == 0.0,
            ScalarFn::Identity => false,
        }
    }
}

/// A fixed spatial profile `b(x)` for additive noise.
#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    /// `b ≡ c`
    Constant(f64),
    /// `Σ_a cos(x_a)`
    Cosine,
    /// `b̂(k) = (1 + |k|²)^{−exponent}` on every non-Nyquist frequency.
    Decaying {
        exponent: f64,
    },
    Field(SpectralField),
}

impl Profile {
    pub fn realize(&self, grid: TorusGrid) -> Result<SpectralField> {
        match self {
            Profile::Constant(c) => Ok(SpectralField::constant(grid, *c)),
            Profile::Cosine => Ok(SpectralField::from_fn(grid, |x| {
                x[..grid.dim()].iter().map(|v| v.cos()).sum()
            })),
            Profile::Decaying { exponent } => {
                let coeffs = grid
                    .frequencies()
                    .map(|k| {
                        if grid.has_nyquist_component(&k) {
                            Complex64::new(0.0, 0.0)
                        } else {
                            Complex64::new((1.0 + grid.norm_sq(&k)).powf(-exponent), 0.0)
                        }
                    })
                    .collect();
                SpectralField::from_coeffs(grid, coeffs)
            }
            Profile::Field(f) => f.resample(grid),
        }
    }
}

/// One component `Bᵢ` of the diffusion coefficient.
#[derive(Debug, Clone, PartialEq)]
pub enum Diffusion {
    /// `Bᵢ(u)(x) = g(u(x))`
    Pointwise(ScalarFn),
    /// `Bᵢ(u) = b`, independent of `u`.
    Additive(Profile),
    /// `Bᵢ(u) = (−Δ+1)^{−1/2} div (g₁(u), …, g_N(u))`
    Divergence(Vec<ScalarFn>),
}

impl Diffusion {
    pub fn is_additive(&self) -> bool {
        match self {
            Diffusion::Additive(_) => true,
            Diffusion::Pointwise(g) => g.is_constant(),
            Diffusion::Divergence(gs) => gs.iter().all(ScalarFn::is_constant),
        }
    }
}

/// Recipe for `u₀`.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    Constant(f64),
    /// `cos x₁ + ½ sin 2x₁`
    Benchmark,
    /// Gaussian coefficients with `|û₀(k)| ~ amplitude (1+|k|²)^{−decay}`,
    /// drawn from a stream keyed by `seed`.
    RandomField {
        seed: u64,
        decay: f64,
        amplitude: f64,
    },
    Field(SpectralField),
}

impl InitialCondition {
    pub fn realize(&self, grid: TorusGrid) -> Result<SpectralField> {
        match self {
            InitialCondition::Constant(c) => Ok(SpectralField::constant(grid, *c)),
            InitialCondition::Benchmark => Ok(SpectralField::from_fn(grid, |x| {
                x[0].cos() + 0.5 * (2.0 * x[0]).sin()
            })),
            InitialCondition::RandomField {
                seed,
                decay,
                amplitude,
            } => Ok(random_smooth_field(grid, *seed, 0, *decay, *amplitude)),
            InitialCondition::Field(f) => f.resample(grid),
        }
    }
}

/// Real random field with independent Gaussian coefficients of standard
/// deviation `amplitude (1+|k|²)^{−decay}`; Nyquist frequencies are left empty.
pub fn random_smooth_field(
    grid: TorusGrid,
    seed: u64,
    index: u64,
    decay: f64,
    amplitude: f64,
) -> SpectralField {
    let driver = NoiseDriver::new(seed, 1).expect("dimension one is valid");
    let mut stream = driver.substream("random-field", index);
    let mut coeffs = vec![Complex64::new(0.0, 0.0); grid.n_coeffs()];
    for i in 0..grid.n_coeffs() {
        let k = grid.wavevector(i);
        if grid.has_nyquist_component(&k) {
            continue;
        }
        let m = grid.mirror_index(i);
        if m < i {
            continue;
        }
        let sd = amplitude * (1.0 + grid.norm_sq(&k)).powf(-decay);
        if m == i {
            coeffs[i] = Complex64::new(sd * stream.next_normal(), 0.0);
        } else {
            let c = Complex64::new(stream.next_normal(), stream.next_normal()) * (sd / 2f64.sqrt());
            coeffs[i] = c;
            coeffs[m] = c.conj();
        }
    }
    SpectralField::from_coeffs(grid, coeffs).expect("length matches grid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_round_trip() {
        for f in [
            ScalarFn::Identity,
            ScalarFn::sin(),
            ScalarFn::Cos {
                amplitude: 0.5,
                frequency: 2.0,
            },
            ScalarFn::Polynomial(vec![1.0, 0.0, -2.0]),
            ScalarFn::Constant(3.0),
        ] {
            assert_eq!(ScalarFn::from_catalog(f.name(), &f.coeffs()).unwrap(), f);
        }
        assert!(ScalarFn::from_catalog("tanh", &[]).is_err());
        assert!(ScalarFn::from_catalog("constant", &[]).is_err());
        assert!(ScalarFn::from_catalog("sin", &[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn evaluation() {
        assert_eq!(ScalarFn::Polynomial(vec![1.0, 2.0, 3.0]).eval(2.0), 17.0);
        assert_eq!(ScalarFn::Identity.eval(-0.5), -0.5);
        assert!((ScalarFn::sin().eval(0.3) - 0.3f64.sin()).abs() < 1e-16);
        assert!(ScalarFn::Constant(2.0).is_constant());
        assert!(!ScalarFn::cos().is_constant());
    }

    #[test]
    fn random_field_is_real_and_reproducible() {
        let g = TorusGrid::new(2, 8, 16).unwrap();
        let a = random_smooth_field(g, 5, 1, 1.0, 2.0);
        let b = random_smooth_field(g, 5, 1, 1.0, 2.0);
        assert_eq!(a, b);
        assert!(a.hermitian_defect() == 0.0);
        assert_ne!(a, random_smooth_field(g, 5, 2, 1.0, 2.0));
    }

    #[test]
    fn profiles() {
        let g = TorusGrid::new(1, 8, 16).unwrap();
        let d = Profile::Decaying { exponent: 0.5 }.realize(g).unwrap();
        assert!((d.coeff(&[2]).unwrap().re - 5f64.powf(-0.5)).abs() < 1e-15);
        assert_eq!(d.coeff(&[4]).unwrap().re, 0.0);
        let c = Profile::Cosine.realize(g).unwrap();
        assert!((c.coeff(&[1]).unwrap().re - 0.5).abs() < 1e-15);
    }
}
