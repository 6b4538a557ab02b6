use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::measure::SpectralMeasure;
use super::truncation::TruncationPair;
use crate::error::{LabError, Result};

/// Atoms whose truncation weight falls below this are dropped.
pub const WEIGHT_CUTOFF: f64 = 1e-12;

/// One-dimensional spectral measure with irregular capacity growth.
///
/// Scale `i >= 1` contributes atoms at the odd multiples `k / T_i` with mass
/// `T_i^{-1} |k / T_i|^{alpha - 1} zeta(T_{i-1} |k / T_i| / epsilon)`, where
/// `zeta` is the truncation transform; scale 0 is `(delta_{-1} + delta_1) / 2`.
/// The sum over scales is divided by its total mass.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IrregularMeasure {
    pub alpha: f64,
    pub epsilon: f64,
    /// `T_0 = 1, T_1, ...`
    pub scales: Vec<u64>,
    /// Mass of each scale before normalization.
    pub scale_masses: Vec<f64>,
    /// Total mass before normalization.
    pub raw_mass: f64,
    pub measure: SpectralMeasure,
}

impl IrregularMeasure {
    /// Radii `(T_i/4 - T_{i-1}/epsilon, T_i/4)` at which the capacity jumps,
    /// for every scale where the inner radius is positive.
    pub fn jump_radii(&self) -> Vec<(usize, f64, f64)> {
        (1..self.scales.len())
            .filter_map(|i| {
                let outer = self.scales[i] as f64 / 4.0;
                let inner = outer - self.scales[i - 1] as f64 / self.epsilon;
                (inner > 0.0).then_some((i, inner, outer))
            })
            .collect()
    }
}

pub fn irregular_measure(
    alpha: f64,
    epsilon: f64,
    ratios: &[u64],
    pair: &TruncationPair,
) -> Result<IrregularMeasure> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(LabError::Domain(format!("alpha = {alpha} must lie in (0, 1)")));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(LabError::Domain(format!("epsilon = {epsilon} must lie in (0, 1)")));
    }
    if let Some(r) = ratios.iter().find(|&&r| r < 3 || r % 2 == 0) {
        return Err(LabError::Construction(format!("scale ratio {r} is not an odd integer >= 3")));
    }
    let mut scales = vec![1u64];
    for &r in ratios {
        let next = scales.last().unwrap().checked_mul(r).ok_or_else(|| LabError::Construction("scale overflow".into()))?;
        scales.push(next);
    }
    let top = *scales.last().unwrap();
    // masses keyed by the numerator over the finest scale, so coinciding atoms merge
    let mut atoms: BTreeMap<u64, f64> = BTreeMap::new();
    *atoms.entry(top).or_default() += 0.5;
    let mut scale_masses = vec![1.0];
    for i in 1..scales.len() {
        let (t, prev) = (scales[i] as f64, scales[i - 1] as f64);
        let mut total = 0.0;
        let mut k = 1u64;
        loop {
            let lambda = k as f64 / t;
            let phi = pair.zeta(prev * lambda / epsilon);
            if phi < WEIGHT_CUTOFF {
                break;
            }
            let w = lambda.powf(alpha - 1.0) * phi / t;
            *atoms.entry(k * (top / scales[i])).or_default() += w;
            total += 2.0 * w;
            k += 2;
        }
        scale_masses.push(total);
    }
    let raw_mass: f64 = scale_masses.iter().sum();
    let mut measure = SpectralMeasure::new(1, false);
    for (&num, &w) in &atoms {
        measure = measure.with_pair(vec![num as f64 / top as f64], w / raw_mass);
    }
    Ok(IrregularMeasure { alpha, epsilon, scales, scale_masses, raw_mass, measure })
}
