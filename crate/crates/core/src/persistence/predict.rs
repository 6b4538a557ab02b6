use serde::Serialize;

use crate::capacity::riesz_reference;
use crate::error::{LabError, Result};
use crate::spectral::{riesz_a, riesz_b, Radial};

/// Constants of a lattice field with covariance `(sum_j q_j (-Laplacian)^j)^{-1}`,
/// `K(x) ~ |x|^{2k-d} / gamma`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct LaplacianConstants {
    /// `K(0)`, which is also the total spectral mass.
    pub k0: f64,
    pub k: u32,
    pub gamma: f64,
}

/// Inputs to the asymptotic predictors. Each optional input enables one form.
pub struct PredictorInputs {
    pub dim: usize,
    pub alpha: f64,
    /// Mass of the absolutely continuous part.
    pub m: f64,
    /// Level growth `u_T / sqrt(log T) -> u'`; replaces `m(d - alpha)` by
    /// `(sqrt(2 m (d - alpha)) + u')^2 / 2`.
    pub u_prime: Option<f64>,
    /// Solver capacities `Cap(B(T))`, aligned with the radii.
    pub capacity: Option<Vec<f64>>,
    /// `delta -> mu[B(delta)]`.
    pub ball_mass: Option<Radial>,
    /// `r -> K(x)` at `|x| = r`.
    pub kernel: Option<Radial>,
    /// `r -> rho(lambda)` at `|lambda| = r`.
    pub density: Option<Radial>,
    /// `mu({0})`, for `alpha = 0` with an atom at the origin.
    pub origin_atom: Option<f64>,
    pub laplacian: Option<LaplacianConstants>,
}

impl PredictorInputs {
    pub fn new(dim: usize, alpha: f64, m: f64) -> Self {
        Self {
            dim,
            alpha,
            m,
            u_prime: None,
            capacity: None,
            ball_mass: None,
            kernel: None,
            density: None,
            origin_atom: None,
            laplacian: None,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PredictionRow {
    pub t: f64,
    /// `factor Cap(B(T)) log T`.
    pub capacity: Option<f64>,
    /// `c_alpha factor log T / mu[B(1/T)]`.
    pub ball_mass: Option<f64>,
    /// `c_alpha B_alpha factor log T / K(T)`.
    pub kernel: Option<f64>,
    /// `c_alpha A_alpha factor T^d log T / rho(1/T)`.
    pub density: Option<f64>,
    /// `factor log T / mu({0})`.
    pub origin_atom: Option<f64>,
    /// `c T^{d-2k} log T`.
    pub laplacian: Option<f64>,
    /// `max / min - 1` over the available forms.
    pub spread: f64,
}

impl PredictionRow {
    pub fn forms(&self) -> Vec<f64> {
        [self.capacity, self.ball_mass, self.kernel, self.density, self.origin_atom, self.laplacian].iter().flatten().copied().collect()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AsymptoticPrediction {
    pub dim: usize,
    pub alpha: f64,
    pub m: f64,
    /// `m (d - alpha)`, or its replacement under `u'`.
    pub factor: f64,
    pub c_alpha: f64,
    pub a_alpha: f64,
    pub b_alpha: f64,
    /// `K(0) 2k gamma c_{d-2k} B_{d-2k}` when Laplacian constants were given.
    pub laplacian_constant: Option<f64>,
    pub rows: Vec<PredictionRow>,
    /// Forms that could not be evaluated, with the reason.
    pub unavailable: Vec<(String, String)>,
}

/// Evaluates every predictor form whose inputs are present.
pub fn predict_theta(inputs: &PredictorInputs, t_list: &[f64]) -> Result<AsymptoticPrediction> {
    let (d, alpha, m) = (inputs.dim, inputs.alpha, inputs.m);
    let reference = riesz_reference(alpha, d)?;
    if !(m >= 0.0) {
        return Err(LabError::Domain("m must be nonnegative".into()));
    }
    if t_list.iter().any(|&t| !(t > 1.0)) {
        return Err(LabError::Domain("radii must exceed 1".into()));
    }
    let df = d as f64;
    let factor = match inputs.u_prime {
        None => m * (df - alpha),
        Some(u) => {
            let s = (2.0 * m * (df - alpha)).sqrt();
            if !(u > -s) {
                return Err(LabError::Domain(format!("u' = {u} must exceed -sqrt(2m(d-alpha)) = {}", -s)));
            }
            0.5 * (s + u).powi(2)
        }
    };
    let (c_alpha, a_alpha, b_alpha) = (reference.capacity, riesz_a(alpha, d), riesz_b(alpha, d));
    let mut unavailable = Vec::new();
    let mut note = |form: &str, why: &str| unavailable.push((form.to_string(), why.to_string()));
    if let Some(c) = &inputs.capacity {
        if c.len() != t_list.len() {
            return Err(LabError::Domain("one capacity per radius is required".into()));
        }
    } else {
        note("capacity", "no solver capacities supplied");
    }
    if inputs.ball_mass.is_none() {
        note("ball_mass", "no ball-mass function supplied");
    }
    if inputs.kernel.is_none() {
        note("kernel", "no kernel supplied");
    }
    let density_ok = alpha > 0.0;
    match (&inputs.density, density_ok) {
        (None, _) => note("density", "no density supplied"),
        (Some(_), false) => note("density", "density form needs alpha > 0"),
        _ => {}
    }
    let origin = match inputs.origin_atom {
        Some(w) if alpha == 0.0 && w > 0.0 => Some(w),
        Some(_) => {
            note("origin_atom", "needs alpha = 0 and a positive atom");
            None
        }
        None => {
            note("origin_atom", "no origin atom supplied");
            None
        }
    };
    let laplacian_constant = match inputs.laplacian {
        Some(lc) => {
            let order = df - 2.0 * lc.k as f64;
            if d < 2 * lc.k as usize + 1 || (order - alpha).abs() > 1e-12 {
                note("laplacian", "needs d >= 2k + 1 and alpha = d - 2k");
                None
            } else {
                let r = riesz_reference(order, d)?;
                Some(lc.k0 * 2.0 * lc.k as f64 * lc.gamma * r.capacity * riesz_b(order, d))
            }
        }
        None => {
            note("laplacian", "no Laplacian constants supplied");
            None
        }
    };
    let rows = t_list
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let lt = t.ln();
            let mut row = PredictionRow {
                t,
                capacity: inputs.capacity.as_ref().map(|c| factor * c[i] * lt),
                ball_mass: inputs.ball_mass.as_ref().map(|f| c_alpha * factor * lt / f(1.0 / t)),
                kernel: inputs.kernel.as_ref().map(|k| c_alpha * b_alpha * factor * lt / k(t)),
                density: if density_ok {
                    inputs.density.as_ref().map(|r| c_alpha * a_alpha * factor * t.powf(df) * lt / r(1.0 / t))
                } else {
                    None
                },
                origin_atom: origin.map(|w| factor * lt / w),
                laplacian: laplacian_constant.map(|c| c * t.powf(alpha) * lt),
                spread: 0.0,
            };
            let f = row.forms();
            if f.len() > 1 {
                let hi = f.iter().cloned().fold(f64::MIN, f64::max);
                let lo = f.iter().cloned().fold(f64::MAX, f64::min);
                row.spread = hi / lo - 1.0;
            }
            row
        })
        .collect();
    Ok(AsymptoticPrediction { dim: d, alpha, m, factor, c_alpha, a_alpha, b_alpha, laplacian_constant, rows, unavailable })
}
