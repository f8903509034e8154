//! Construction and numerical verification of multipliers for hypoelliptic
//! estimates of transport operators `L = ∂_t + Bx·∇_x` with a degenerate
//! diffusion direction `Q`.
//!
//! The pipeline runs in layers:
//!
//! * [`kalman`]: iterated directions `Q(B^T)^j`, the Kalman index `r` and the
//!   directional coercivity constant.
//! * [`exponents`]: the exponent recursion and its admissibility relations.
//! * [`cutoff`]: smooth plateau cutoffs built from `exp(-1/t)`.
//! * [`multiplier`]: symbols, their transport derivatives and fitted
//!   inequality certificates on sampled frequency grids.
//! * [`spectral`]: pseudo-spectral checks of the commutator identity and of
//!   the operator-level estimates on test-function ensembles.
//! * [`pipeline`]: config-driven runs producing JSON and CSV reports.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod cutoff;
pub mod error;
pub mod exponents;
pub mod kalman;
pub mod multiplier;
pub mod pipeline;
pub mod presets;
pub mod report;
pub mod sampling;
pub mod spectral;

pub use error::{Error, Result};
