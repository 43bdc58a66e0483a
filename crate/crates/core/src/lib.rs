//! Spectral laboratory for the semilinear SPDE
//!
//! ```text
//! du = (Δ − 1) u dt + (−Δ + 1)^{δ₀} F(u) dt + (−Δ + 1)^{δ₁/2} Σᵢ Bᵢ(u) dβⁱ
//! ```
//!
//! on the periodic torus `[0, 2π)^N`, `N ∈ {1, 2}`.
//!
//! The crate is organised bottom-up:
//!
//! * [`spectral`]: torus grids, Fourier transforms, Fourier multipliers and
//!   the Lebesgue / Sobolev / Bessel-potential norms.
//! * [`noise`]: reproducible finite-dimensional Brownian increments.
//! * [`stoch_conv`]: stochastic and deterministic convolutions, including the
//!   factorization representation of the stochastic convolution.
//! * [`mild_solver`]: Nemytskii operators, the Picard mild solver and an
//!   exponential Euler stepper.
//! * [`experiments`]: Monte Carlo moment studies built on top of the solvers.
//! * [`cli`]: configuration, orchestration, persistence and replay.
//!
//! Sample-parallel work goes through [`exec`], which uses rayon when the
//! `parallel` feature is enabled and falls back to a sequential loop otherwise.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod exec;
pub mod experiments;
pub mod mild_solver;
pub mod noise;
pub mod quadrature;
pub mod spectral;
pub mod stoch_conv;

pub use error::{Error, Result};
