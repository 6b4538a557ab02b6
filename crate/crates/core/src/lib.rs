//! Numerical laboratory for stationary Gaussian fields given by their spectral
//! measures: capacities and equilibrium potentials, spectral synthesis,
//! persistence probabilities and their asymptotic predictors.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fieldsim;
pub mod numerics;
pub mod persistence;
pub mod capacity;
pub mod spectral;

pub use error::{LabError, Result};
