//! Spectral measures, their covariance kernels, and the special constructions
//! used throughout the crate (Riesz family, truncation pair, Cantor-type and
//! irregular measures).

mod cantor;
mod diagnostics;
mod irregular;
mod kernel;
mod measure;
mod poisson;
mod tauberian;
mod truncation;

pub use cantor::{cantor_measure, CantorRecipe};
pub use diagnostics::{diagnostics, dyadic_range, Diagnostics, SingularityProfile};
pub use irregular::{irregular_measure, IrregularMeasure, WEIGHT_CUTOFF};
pub use kernel::{
    ball_mass_from_kernel, kernel_from_measure, ClosedForm, ClosedKernel, CovarianceKernel, KernelGrid,
    KernelTable,
};
pub use measure::{riesz_measure, Atom, CellProfile, DensityGrid, SpectralMeasure, SCHEMA_VERSION};
pub use poisson::{alternating_identity, periodize_and_discretize, PoissonCheck, SampledFunction};
pub use tauberian::{
    density_ball_mass, density_normalized_w, kernel_ball_mass, kernel_normalized_w, tauberian_check, Radial,
    TauberianHypothesis, TauberianRow,
};
pub use truncation::{build_truncation, TruncationPair};

use crate::error::{LabError, Result};
use crate::numerics::{gamma_fn, ln_gamma_fn};
use std::f64::consts::PI;

/// Density constant A of the Riesz measure: rho(lambda) = A |lambda|^(alpha - d).
pub fn riesz_a(alpha: f64, d: usize) -> f64 {
    let d = d as f64;
    alpha * gamma_fn(d / 2.0) / (2.0 * PI.powf(d / 2.0))
}

/// Kernel constant B of the Riesz kernel B |x|^(-alpha).
pub fn riesz_b(alpha: f64, d: usize) -> f64 {
    if alpha == 0.0 {
        return 1.0;
    }
    let d = d as f64;
    (ln_gamma_fn(1.0 + alpha / 2.0) + ln_gamma_fn(d / 2.0) - ln_gamma_fn((d - alpha) / 2.0)).exp()
        / PI.powf(alpha)
}

pub(crate) fn check_alpha(alpha: f64, d: usize) -> Result<()> {
    if d == 0 || !(0.0..d as f64).contains(&alpha) || !alpha.is_finite() {
        return Err(LabError::Domain(format!("alpha = {alpha} must lie in [0, {d})")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn riesz_constants_match_hand_values() {
        assert!((riesz_a(0.5, 1) - 0.25).abs() < 1e-15);
        assert!((riesz_b(0.5, 1) - 0.25).abs() < 1e-14);
        assert!((riesz_b(1.0, 3) - 0.25).abs() < 1e-14);
        assert_eq!(riesz_b(0.0, 4), 1.0);
    }

    #[test]
    fn alpha_guard() {
        assert!(check_alpha(1.0, 1).is_err());
        assert!(check_alpha(-0.1, 2).is_err());
        assert!(check_alpha(0.0, 1).is_ok());
    }
}
