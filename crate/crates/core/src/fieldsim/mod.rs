//! Spectral synthesis of stationary Gaussian fields from atomized spectral
//! measures, independent decompositions, and Cameron-Martin tilting.
//!
//! A field is `f(x) = sum_j sqrt(2 w_j) (zeta_j cos(2 pi lambda_j.x) + eta_j sin(2 pi lambda_j.x))`
//! over mirrored pairs, plus `sqrt(w_0) zeta_0 cos(2 pi lambda_0.x)` for atoms that
//! are their own mirror.

mod atomize;
mod synth;
mod tilt;

pub use atomize::{atomize, AtomizedSpectrum, SynthAtom};
pub use synth::{decompose_sample, rkhs_pairing, sample_field, stream_id, FieldSample, FieldSampler};
pub use tilt::{tilt_coefficients, tilt_sample, TiltSpec};

