//! Torus grids, Fourier transforms, multipliers and spatial norms.

mod fft;
mod field;
mod grid;
mod multiplier;
mod norms;
pub mod snapshot;

pub use field::{inverse_transform, transform, SpectralField};
pub use grid::{TorusGrid, Wavepoint, Wavevector, MAX_DIM};
pub use multiplier::{analytic_envelope, analytic_lattice_sup, Multiplier, VectorMultiplier};
pub use norms::{lp_of_values, multi_indices, norm_bessel, norm_lp, norm_sobolev, sobolev_weights};
