use serde::{Deserialize, Serialize};

use super::measure::{CellProfile, SpectralMeasure};
use crate::error::{LabError, Result};
use crate::numerics::linear_fit;

/// Finite-sample description of the singularity of `mu` at the origin.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SingularityProfile {
    /// Least-squares slope of `log mu[B(delta)]` against `log delta`.
    pub alpha_hat: f64,
    /// Smallest and largest slope between consecutive dyadic radii.
    pub lower_slope: f64,
    pub upper_slope: f64,
    /// `(T, T^alpha_hat mu[B(1/T)])` with `T = 1/delta`.
    pub residual: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Diagnostics {
    pub profile: SingularityProfile,
    /// `max mu[B(2 delta)] / mu[B(delta)]` over the range.
    pub doubling_const: f64,
    /// `max sup_u mu[u + B(delta)] / mu[B(delta)]` over the range; infinite when a ball at the origin is empty.
    pub origin_dominance_const: f64,
    pub deltas: Vec<f64>,
    pub masses: Vec<f64>,
}

/// `delta_max, delta_max / 2, ..., delta_max / 2^(levels - 1)`.
pub fn dyadic_range(delta_max: f64, levels: usize) -> Vec<f64> {
    (0..levels).map(|k| delta_max * 0.5f64.powi(k as i32)).collect()
}

fn resolution(mu: &SpectralMeasure) -> f64 {
    match mu.density() {
        Some(g) if g.dim() == 1 && matches!(g.profile, CellProfile::RadialPower { .. }) => 0.0,
        Some(g) => g.step,
        None => 0.0,
    }
}

fn candidate_centres(mu: &SpectralMeasure) -> Vec<Vec<f64>> {
    let d = mu.dim();
    let mut c: Vec<Vec<f64>> = vec![vec![0.0; d]];
    c.extend(mu.atoms().iter().map(|a| a.freq.clone()));
    if let Some(g) = mu.density() {
        c.extend((0..g.cell_count()).map(|i| g.cell_center(i)));
    }
    if let Some(s) = mu.singular() {
        let w = s.interval_width();
        for x in s.left_endpoints().into_iter().take(4096) {
            c.push(vec![x]);
            c.push(vec![x + 0.5 * w]);
            c.push(vec![-x]);
        }
    }
    c
}

/// Doubling and origin-dominance constants and the fitted singularity order.
pub fn diagnostics(mu: &SpectralMeasure, deltas: &[f64]) -> Result<Diagnostics> {
    if deltas.len() < 2 {
        return Err(LabError::Domain("need at least two radii".into()));
    }
    let res = resolution(mu);
    if let Some(&small) = deltas.iter().min_by(|a, b| a.partial_cmp(b).unwrap()) {
        if small < res {
            return Err(LabError::Resolution(format!("radius {small} below grid step {res}")));
        }
    }
    let masses: Vec<f64> = deltas.iter().map(|&d| mu.ball_mass(d)).collect();
    let positive: Vec<(f64, f64)> =
        deltas.iter().zip(&masses).filter(|(_, &m)| m > 0.0).map(|(&d, &m)| (d.ln(), m.ln())).collect();
    let (alpha_hat, lower_slope, upper_slope) = if positive.len() >= 2 {
        let (x, y): (Vec<f64>, Vec<f64>) = positive.iter().cloned().unzip();
        let (slope, _) = linear_fit(&x, &y);
        let locals: Vec<f64> = positive.windows(2).map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0)).collect();
        let lo = locals.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = locals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (slope, lo, hi)
    } else {
        (f64::NAN, f64::NAN, f64::NAN)
    };
    let residual = deltas.iter().zip(&masses).map(|(&d, &m)| (1.0 / d, d.powf(-alpha_hat) * m)).collect();
    let doubling_const = deltas
        .iter()
        .zip(&masses)
        .map(|(&d, &m)| if m > 0.0 { mu.ball_mass(2.0 * d) / m } else { f64::INFINITY })
        .fold(0.0, f64::max);
    let centres = candidate_centres(mu);
    let origin_dominance_const = deltas
        .iter()
        .zip(&masses)
        .map(|(&d, &m)| {
            let sup = centres.iter().map(|u| mu.shifted_ball_mass(u, d)).fold(0.0, f64::max);
            if m > 0.0 {
                sup / m
            } else if sup > 0.0 {
                f64::INFINITY
            } else {
                1.0
            }
        })
        .fold(0.0, f64::max);
    Ok(Diagnostics {
        profile: SingularityProfile { alpha_hat, lower_slope, upper_slope, residual },
        doubling_const,
        origin_dominance_const,
        deltas: deltas.to_vec(),
        masses,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{riesz_measure, DensityGrid};

    #[test]
    fn riesz_profile() {
        let mu = riesz_measure(0.5, 1, 1.0 / 64.0, 2.0).unwrap();
        let d = diagnostics(&mu, &dyadic_range(1.0, 8)).unwrap();
        assert!((d.profile.alpha_hat - 0.5).abs() < 0.01);
        assert!((d.doubling_const - 2f64.sqrt()).abs() < 1e-9);
        assert!(d.profile.lower_slope <= d.profile.alpha_hat + 1e-12 && d.profile.alpha_hat <= d.profile.upper_slope + 1e-12);
    }

    #[test]
    fn off_origin_atoms_break_dominance() {
        let mu = SpectralMeasure::cosine_pair(vec![1.0], 0.5);
        let d = diagnostics(&mu, &dyadic_range(0.5, 5)).unwrap();
        assert!(d.origin_dominance_const.is_infinite());
    }

    #[test]
    fn coarse_grid_rejects_small_radii() {
        let g = DensityGrid::from_values(0.25, vec![8], &[0.5; 8]).unwrap();
        let mu = SpectralMeasure::new(1, false).with_density(g).unwrap();
        assert!(matches!(diagnostics(&mu, &dyadic_range(1.0, 6)), Err(LabError::Resolution(_))));
    }
}
