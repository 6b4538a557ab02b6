use std::f64::consts::PI;

use serde::Serialize;

use super::{riesz_a, riesz_b};
use crate::error::{LabError, Result};
use crate::numerics::{gauss_composite, sphere_area, tanh_sinh, tanh_sinh_ends};

/// Radial function of `|x|` or `|lambda|`.
pub type Radial = Box<dyn Fn(f64) -> f64 + Sync>;

/// Regular-variation hypothesis on either side of the Fourier pair.
pub enum TauberianHypothesis {
    /// `K(x) ~ B |x|^{-alpha} w(|x|)`, given as a radial kernel in d = 1.
    Kernel(Radial),
    /// `rho(lambda) ~ A |lambda|^{alpha - d} w(1 / |lambda|)`, radial density in R^d.
    Density { rho: Radial, dim: usize },
}

#[derive(Clone, Debug, Serialize)]
pub struct TauberianRow {
    pub t: f64,
    pub ball_mass: f64,
    /// `T^{-alpha} w(T)`.
    pub prediction: f64,
    pub ratio: f64,
}

/// `mu[B(delta)] = (2/pi) int_0^inf K(x) sin(2 pi delta x) / x dx` for a radial 1-d kernel.
///
/// Half-period panels up to `u = n pi`, then repeated averaging of the last
/// partial sums to sum the alternating tail.
pub fn kernel_ball_mass(k: &dyn Fn(f64) -> f64, delta: f64) -> f64 {
    let a = 2.0 * PI * delta;
    let g = |u: f64| k(u / a) * u.sin() / u;
    let first = tanh_sinh(0.0, PI, 1e-13, g);
    let panels = 400usize;
    let mut partial = Vec::with_capacity(panels);
    let mut s = first;
    for j in 1..panels {
        let lo = j as f64 * PI;
        s += gauss_composite(lo, lo + PI, 1, 24, g);
        partial.push(s);
    }
    let mut tail: Vec<f64> = partial[partial.len() - 24..].to_vec();
    while tail.len() > 1 {
        tail = tail.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    }
    2.0 / PI * tail[0]
}

/// `mu[B(delta)]` for a radial density in R^d, singular at the origin at worst like a power.
pub fn density_ball_mass(rho: &dyn Fn(f64) -> f64, dim: usize, delta: f64) -> f64 {
    let d = dim as f64;
    sphere_area(dim) * tanh_sinh_ends(0.0, delta, 1e-12, |r, _, _| rho(r) * r.powf(d - 1.0))
}

/// Residual table `mu[B(1/T)] T^alpha / w(T)` over `t_range`.
///
/// Kernels that decay faster than `|x|^{-d}` carry no spectral singularity and are rejected.
pub fn tauberian_check(
    hyp: &TauberianHypothesis,
    alpha: f64,
    w: &dyn Fn(f64) -> f64,
    t_range: &[f64],
) -> Result<Vec<TauberianRow>> {
    let dim = match hyp {
        TauberianHypothesis::Kernel(_) => 1,
        TauberianHypothesis::Density { dim, .. } => *dim,
    };
    if !(alpha > 0.0 && alpha < dim as f64) {
        return Err(LabError::Hypothesis(format!("alpha = {alpha} must lie in (0, {dim})")));
    }
    if let TauberianHypothesis::Kernel(k) = hyp {
        let x = t_range.iter().cloned().fold(64.0, f64::max);
        let (k1, k2) = (k(x), k(2.0 * x));
        let order = if k1 > 0.0 && k2 > 0.0 { (k1 / k2).log2() } else { f64::INFINITY };
        if order >= dim as f64 - 1e-3 {
            return Err(LabError::Hypothesis(format!(
                "kernel decays with local order {order:.3} at |x| = {x}: no singularity at the spectral origin"
            )));
        }
    }
    Ok(t_range
        .iter()
        .map(|&t| {
            let ball_mass = match hyp {
                TauberianHypothesis::Kernel(k) => kernel_ball_mass(k.as_ref(), 1.0 / t),
                TauberianHypothesis::Density { rho, dim } => density_ball_mass(rho.as_ref(), *dim, 1.0 / t),
            };
            let prediction = t.powf(-alpha) * w(t);
            TauberianRow { t, ball_mass, prediction, ratio: ball_mass / prediction }
        })
        .collect())
}

/// `w` read off a kernel hypothesis: `w(T) = K(T) T^alpha / B`.
pub fn kernel_normalized_w(k: &dyn Fn(f64) -> f64, alpha: f64, dim: usize) -> impl Fn(f64) -> f64 + '_ {
    let b = riesz_b(alpha, dim);
    move |t| k(t) * t.powf(alpha) / b
}

/// `w` read off a density hypothesis: `w(T) = rho(1/T) T^{alpha - d} / A`.
pub fn density_normalized_w(rho: &dyn Fn(f64) -> f64, alpha: f64, dim: usize) -> impl Fn(f64) -> f64 + '_ {
    let a = riesz_a(alpha, dim);
    move |t| rho(1.0 / t) * t.powf(alpha - dim as f64) / a
}
