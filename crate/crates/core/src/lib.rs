//! Numerics for the stochastic heat equation with rough-in-time Gaussian noise:
//! kernels, Gaussian path and field samplers, the ε-approximation stochastic
//! integral and its covariance, Feynman–Kac Monte Carlo, and analytic bounds.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic_bounds;
pub mod error;
pub mod feynman_kac;
pub mod gaussian_paths;
pub mod kernels;
pub mod linalg;
pub mod path;
pub mod quadrature;
pub mod rng;
pub mod stats;
pub mod stochastic_integral;

pub use error::{Error, Result};
