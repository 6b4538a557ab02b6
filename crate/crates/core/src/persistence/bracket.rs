use std::f64::consts::PI;

use serde::Serialize;

use super::estimate::PersistenceEstimate;
use crate::error::{LabError, Result};

/// Bounds on `theta^level` from the capacity and an estimate at a lower level.
#[derive(Clone, Debug, Serialize)]
pub struct PersistenceBracket {
    pub level: f64,
    pub level_low: f64,
    pub capacity: f64,
    /// `level^2 Cap / 2`.
    pub lower: f64,
    /// `theta^{l'} + ((l - l')^2 Cap + 2/e) / (2 P[Per^{l'}])`; absent when no
    /// sample persisted at the lower level.
    pub upper: Option<f64>,
    /// Delta-method standard error of `upper` from the estimate at the lower level.
    pub upper_se: Option<f64>,
}

impl PersistenceBracket {
    /// Whether `theta` lies in the bracket, widening the upper end by `k` standard errors.
    pub fn contains(&self, theta: f64, k: f64) -> bool {
        theta >= self.lower && self.upper.is_none_or(|u| theta <= u + k * self.upper_se.unwrap_or(0.0))
    }
}

pub fn bracket_persistence(capacity: f64, low: &PersistenceEstimate, level: f64) -> Result<PersistenceBracket> {
    let l0 = low.level;
    if level < l0 {
        return Err(LabError::Domain(format!("level {level} below the estimate's level {l0}")));
    }
    if !(capacity > 0.0) {
        return Err(LabError::Domain("capacity must be positive".into()));
    }
    let lower = 0.5 * level * level * capacity;
    let (upper, upper_se) = if low.p_hat > 0.0 {
        let c = 0.5 * ((level - l0).powi(2) * capacity + 2.0 / std::f64::consts::E);
        let p = low.p_hat;
        (Some(-p.ln() + c / p), Some((1.0 / p + c / (p * p)) * low.se_p))
    } else {
        (None, None)
    };
    Ok(PersistenceBracket { level, level_low: l0, capacity, lower, upper, upper_se })
}

/// `((2 pi)^{-1/2} (1/x - 1/x^3) e^{-x^2/2}, e^{-x^2/2} / 2)`, a bracket on
/// `P[Z >= x]`; the lower end is clamped at zero.
pub fn gaussian_tail(x: f64) -> Result<(f64, f64)> {
    if !(x > 0.0) {
        return Err(LabError::Domain("tail bounds need x > 0".into()));
    }
    let g = (-0.5 * x * x).exp();
    let lower = ((1.0 / x - 1.0 / (x * x * x)) * g / (2.0 * PI).sqrt()).max(0.0);
    Ok((lower, 0.5 * g))
}
