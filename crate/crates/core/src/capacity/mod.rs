//! Capacities, equilibrium measures and equilibrium potentials of discretized
//! domains, with closed-form Riesz references and structural checks.

mod domain;
mod gram;
mod profiles;
mod riesz;
mod solver;
mod validators;

pub use domain::DiscreteDomain;
pub use gram::{GramMatrix, Regularization, EIGEN_CHECK_LIMIT};
pub use profiles::{
    capacity_ball, capacity_growth_profile, capacity_ratios, riesz_scaling_check, CapacitySession, GrowthRow, Resolution, ScalingRow,
};
pub use riesz::{riesz_reference, RieszReference, RieszRegime};
pub use solver::{equilibrium_measure, EquilibriumSolution, SolverConfig};
pub use validators::{
    bracket_check, dual_check, radialization_check, smoothing_check, stability_check, subadditivity_check,
    structural_validators, BracketReport, DualReport, ValidatorRow, BRACKET_CONSTANT,
};

use crate::error::{LabError, Result};
use crate::spectral::{CovarianceKernel, SpectralMeasure};

/// A signed measure on finitely many points.
#[derive(Clone, Debug, PartialEq)]
pub struct PointMeasure {
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl PointMeasure {
    pub fn new(points: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if points.len() != weights.len() {
            return Err(LabError::Domain("points and weights differ in length".into()));
        }
        Ok(Self { points, weights })
    }

    pub fn dirac(x: Vec<f64>) -> Self {
        Self { points: vec![x], weights: vec![1.0] }
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn combine(&self, a: f64, other: &PointMeasure, b: f64) -> PointMeasure {
        let mut points = self.points.clone();
        let mut weights: Vec<f64> = self.weights.iter().map(|w| a * w).collect();
        for (p, w) in other.points.iter().zip(&other.weights) {
            match points.iter().position(|q| q == p) {
                Some(i) => weights[i] += b * w,
                None => {
                    points.push(p.clone());
                    weights.push(b * w);
                }
            }
        }
        PointMeasure { points, weights }
    }
}

/// `E[nu, eta] = sum_ij nu_i eta_j K(x_i - y_j)`.
///
/// Fails with an extent error when a separation falls outside the kernel's
/// domain of definition (a table returns NaN there).
pub fn energy(nu: &PointMeasure, eta: &PointMeasure, kernel: &dyn CovarianceKernel) -> Result<f64> {
    let mut e = 0.0;
    for (x, &a) in nu.points.iter().zip(&nu.weights) {
        for (y, &b) in eta.points.iter().zip(&eta.weights) {
            let diff: Vec<f64> = x.iter().zip(y).map(|(p, q)| p - q).collect();
            let k = kernel.eval(&diff);
            if !k.is_finite() {
                return Err(LabError::Extent(format!("separation {diff:?}")));
            }
            e += a * b * k;
        }
    }
    Ok(e)
}

/// Spectral side `int F[nu] conj(F[eta]) d mu`, by polarization.
pub fn spectral_energy(nu: &PointMeasure, eta: &PointMeasure, mu: &SpectralMeasure) -> f64 {
    let plus = nu.combine(1.0, eta, 1.0);
    let minus = nu.combine(1.0, eta, -1.0);
    0.25 * (mu.spectral_energy(&plus.points, &plus.weights) - mu.spectral_energy(&minus.points, &minus.weights))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{kernel_from_measure, KernelGrid};

    #[test]
    fn energy_of_diracs() {
        let mu = SpectralMeasure::cosine_pair(vec![1.0], 0.5);
        let a = PointMeasure::dirac(vec![0.0]);
        let b = PointMeasure::dirac(vec![0.25]);
        assert!((energy(&a, &a, &mu).unwrap() - 1.0).abs() < 1e-15);
        assert!(energy(&a, &b, &mu).unwrap().abs() < 1e-15);
    }

    #[test]
    fn table_extent_is_enforced() {
        let mu = SpectralMeasure::cosine_pair(vec![1.0], 0.5);
        let table = kernel_from_measure(&mu, KernelGrid { step: 0.25, extent: 1.0 }).unwrap();
        let a = PointMeasure::dirac(vec![0.0]);
        let far = PointMeasure::dirac(vec![3.0]);
        assert!(matches!(energy(&a, &far, &table), Err(LabError::Extent(_))));
    }
}
