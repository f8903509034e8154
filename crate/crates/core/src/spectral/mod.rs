//! Pseudo-spectral verification on periodic boxes: multipliers `m(D_x)`, the
//! transport operator `L`, the commutator identity of the multiplier method
//! and empirical constants of the hypoelliptic estimates.

pub mod commutator;
pub mod ensemble;
pub mod estimate;
pub mod fft;
pub mod grid;
pub mod operators;

pub use commutator::{commutator_identity_check, CommutatorReport, CommutatorSample};
pub use ensemble::{EnsembleSource, TestFunctionKind, TestFunctionSpec};
pub use estimate::{measure_estimate, measure_estimates, EstimateKind, EstimateMeasurement, EstimateSample, MIN_ENSEMBLE};
pub use grid::SpectralGrid;
pub use operators::{apply_multiplier, apply_transport, MultiplierTable, TAIL_LIMIT};
