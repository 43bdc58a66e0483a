//! Mild solutions of
//! `du = (Δ−1)u dt + (−Δ+1)^{δ₀} F(u) dt + μ (−Δ+1)^{δ₁/2} Σᵢ Bᵢ(u) dβⁱ`.
//!
//! [`picard_solve`] iterates the mild map pathwise on one noise realization;
//! [`euler_solve`] is an independent exponential Euler stepper. Both use the
//! left-point (Itô) noise sums and the same Nemytskii operators.

mod functions;
mod nemytskii;
mod problem;
mod solve;

pub use functions::{random_smooth_field, Diffusion, InitialCondition, Profile, ScalarFn};
pub use nemytskii::{growth_constants, nemytskii_b, nemytskii_f, GrowthConstants, Nemytskii};
pub use problem::{div_noise_spec, ProblemSpec, SolveConfig};
pub use solve::{
    euler_solve, euler_solve_critical, picard_solve, picard_solve_split, sobolev_track, PicardLog,
    SobolevTrack, Trajectory,
};

#[cfg(test)]
use solve::mild_map;
