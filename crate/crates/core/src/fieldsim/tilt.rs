use serde::Serialize;

use super::synth::{FieldSample, FieldSampler};
use crate::capacity::{EquilibriumSolution, PointMeasure};
use crate::error::{LabError, Result};

/// Shift by `level * h` with `h = K * rho`, where `K` is the covariance of the
/// atomized spectrum being sampled.
#[derive(Clone, Debug, Serialize)]
pub struct TiltSpec {
    #[serde(skip)]
    pub rho: PointMeasure,
    pub level: f64,
    /// `||h||_H^2 = sum_ij rho_i rho_j K(y_i - y_j)`.
    pub norm2: f64,
    #[serde(skip)]
    shift: Vec<[f64; 2]>,
}

impl TiltSpec {
    pub fn new(sampler: &FieldSampler, rho: PointMeasure, level: f64) -> Result<Self> {
        if !level.is_finite() {
            return Err(LabError::Domain("tilt level must be finite".into()));
        }
        let shift = sampler.representer(&rho);
        let norm2 = shift.iter().map(|c| c[0] * c[0] + c[1] * c[1]).sum();
        Ok(Self { rho, level, norm2, shift })
    }

    /// Tilt along the equilibrium potential `h_D = Cap * K * nu_D`.
    pub fn from_equilibrium(sampler: &FieldSampler, sol: &EquilibriumSolution, level: f64) -> Result<Self> {
        if sol.infinite {
            return Err(LabError::Degenerate("infinite capacity has no equilibrium potential".into()));
        }
        let (points, weights) = sol
            .points
            .iter()
            .zip(&sol.nu)
            .filter(|(_, &w)| w > 0.0)
            .map(|(p, &w)| (p.clone(), sol.capacity * w))
            .unzip();
        Self::new(sampler, PointMeasure::new(points, weights)?, level)
    }

    pub fn with_level(&self, level: f64) -> Self {
        Self { level, ..self.clone() }
    }

    /// Coefficient shift `level * (a_j, b_j)`.
    pub fn shift(&self) -> &[[f64; 2]] {
        &self.shift
    }
}

/// Base coefficients shifted by the tilt, and `log W` with `W = dP/dP_tilt`
/// at the shifted outcome: `log W = -level <zeta~, a> + level^2 ||h||^2 / 2`.
pub fn tilt_coefficients(tilt: &TiltSpec, coeffs: &mut [[f64; 2]]) -> f64 {
    let l = tilt.level;
    if l == 0.0 {
        return 0.0;
    }
    let mut dot = 0.0;
    for (c, a) in coeffs.iter_mut().zip(&tilt.shift) {
        c[0] += l * a[0];
        c[1] += l * a[1];
        dot += c[0] * a[0] + c[1] * a[1];
    }
    -l * dot + 0.5 * l * l * tilt.norm2
}

/// A sample of the tilted law and its log importance weight. For bounded
/// `Phi`, `E[Phi(f)] = E_tilt[Phi(f~) W]` with `W = exp(log_weight)`.
pub fn tilt_sample(sampler: &FieldSampler, tilt: &TiltSpec, seed: u64, rep: u64) -> Result<(FieldSample, f64)> {
    if tilt.shift.len() != sampler.atom_count() {
        return Err(LabError::Support("tilt built for another spectrum".into()));
    }
    let mut s = sampler.sample(seed, rep);
    let log_w = tilt_coefficients(tilt, &mut s.coefficients);
    let mut values = Vec::new();
    sampler.values(&s.coefficients, &mut values);
    s.values = values;
    Ok((s, log_w))
}
