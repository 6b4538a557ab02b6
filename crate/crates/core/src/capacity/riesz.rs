use std::f64::consts::PI;

use serde::Serialize;

use crate::error::Result;
use crate::numerics::{ln_gamma_fn, tanh_sinh_ends};
use crate::spectral::{check_alpha, riesz_b};

const TOL: f64 = 1e-11;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RieszRegime {
    Constant,
    /// `alpha in (0, d-2)`: mass on the sphere, potential above 1 inside.
    Subharmonic,
    /// `alpha = d - 2`.
    Newtonian,
    /// `alpha in (d-2, d)`: mass spread through the ball.
    Superharmonic,
}

/// Closed-form unit-ball capacity `c_alpha` and equilibrium potential `h_alpha`
/// for the Riesz kernel `B |x|^-alpha`.
#[derive(Clone, Debug, Serialize)]
pub struct RieszReference {
    pub alpha: f64,
    pub dim: usize,
    pub regime: RieszRegime,
    pub capacity: f64,
    /// Unnormalized potential of the equilibrium measure at `|x| = 1`.
    pub normalizer: f64,
}

pub fn riesz_reference(alpha: f64, dim: usize) -> Result<RieszReference> {
    check_alpha(alpha, dim)?;
    let d = dim as f64;
    let regime = if alpha == 0.0 {
        RieszRegime::Constant
    } else if dim >= 3 && (alpha - (d - 2.0)).abs() < 1e-12 {
        RieszRegime::Newtonian
    } else if alpha < d - 2.0 {
        RieszRegime::Subharmonic
    } else {
        RieszRegime::Superharmonic
    };
    let lg = ln_gamma_fn;
    let capacity = match regime {
        RieszRegime::Constant => 1.0,
        RieszRegime::Subharmonic => {
            ((2.0 + alpha - d) * 2f64.ln() + (alpha + 0.5) * PI.ln() + lg(d - alpha / 2.0 - 1.0) + lg((d - alpha) / 2.0)
                - lg((d - alpha - 1.0) / 2.0)
                - lg(1.0 + alpha / 2.0)
                - 2.0 * lg(d / 2.0))
                .exp()
        }
        RieszRegime::Newtonian => (PI.ln() * (d - 2.0) - 2.0 * lg(d / 2.0)).exp(),
        RieszRegime::Superharmonic => (alpha * PI.ln() - 2.0 * lg(1.0 + alpha / 2.0)).exp(),
    };
    let mut r = RieszReference { alpha, dim, regime, capacity, normalizer: 1.0 };
    r.normalizer = r.raw_potential(1.0);
    Ok(r)
}

/// `int_0^pi (diff^2 + 4ab sin^2(t/2))^{-alpha/2} sin^{d-2} t dt` with `diff = |a - b|`:
/// the average of `|x - y|^-alpha` over `|y| = b` for `|x| = a`, up to the sphere area.
fn polar_integral(alpha: f64, d: usize, a: f64, b: f64, diff: f64) -> f64 {
    let gap = diff * diff;
    tanh_sinh_ends(0.0, PI, TOL, |t, from0, toend| {
        let half = 0.5 * from0;
        let s = if t < 0.5 * PI { t.sin() } else { toend.sin() };
        (gap + 4.0 * a * b * half.sin() * half.sin()).powf(-alpha / 2.0) * s.powi(d as i32 - 2)
    })
}

impl RieszReference {
    /// Potential of the unnormalized equilibrium measure at radius `r`.
    fn raw_potential(&self, r: f64) -> f64 {
        let (alpha, d) = (self.alpha, self.dim);
        match self.regime {
            RieszRegime::Constant | RieszRegime::Newtonian => 1.0,
            RieszRegime::Subharmonic => polar_integral(alpha, d, r, 1.0, (r - 1.0).abs()),
            RieszRegime::Superharmonic if d == 1 => {
                let e = -(1.0 - alpha) / 2.0;
                let weight = |to_lo: f64, to_hi: f64| (to_lo * to_hi).powf(e);
                if r.abs() < 1.0 {
                    tanh_sinh_ends(-1.0, r, TOL, |y, dl, dr| weight(dl, 1.0 - y) * dr.powf(-alpha))
                        + tanh_sinh_ends(r, 1.0, TOL, |y, dr, dh| weight(1.0 + y, dh) * dr.powf(-alpha))
                } else {
                    let r = r.abs();
                    tanh_sinh_ends(-1.0, 1.0, TOL, |_, dl, dh| weight(dl, dh) * (r - 1.0 + dh).powf(-alpha))
                }
            }
            RieszRegime::Superharmonic => {
                let e = -(d as f64 - alpha) / 2.0;
                let radial = |s: f64, to_one: f64, diff: f64| {
                    (to_one * (1.0 + s)).powf(e) * s.powi(d as i32 - 1) * polar_integral(alpha, d, r, s, diff)
                };
                if r < 1.0 {
                    tanh_sinh_ends(0.0, r, 1e-9, |s, _, dr| radial(s, 1.0 - s, dr))
                        + tanh_sinh_ends(r, 1.0, 1e-9, |s, dr, to_one| radial(s, to_one, dr))
                } else {
                    tanh_sinh_ends(0.0, 1.0, 1e-9, |s, _, to_one| radial(s, to_one, r - 1.0 + to_one))
                }
            }
        }
    }

    /// `h_alpha` at radius `r = |x|`.
    pub fn potential(&self, r: f64) -> f64 {
        match self.regime {
            RieszRegime::Constant => 1.0,
            RieszRegime::Newtonian => {
                if r <= 1.0 {
                    1.0
                } else {
                    r.powf(2.0 - self.dim as f64)
                }
            }
            _ => self.raw_potential(r) / self.normalizer,
        }
    }

    /// Capacity from the normalized equilibrium measure's energy, independent of the closed form.
    pub fn capacity_from_energy(&self) -> f64 {
        let d = self.dim as f64;
        let b = riesz_b(self.alpha, self.dim);
        match self.regime {
            RieszRegime::Constant => 1.0,
            RieszRegime::Newtonian | RieszRegime::Subharmonic => {
                let total = polar_integral(0.0, self.dim, 1.0, 1.0, 0.0);
                total / (b * polar_integral(self.alpha, self.dim, 1.0, 1.0, 0.0))
            }
            RieszRegime::Superharmonic => {
                let e = -(d - self.alpha) / 2.0;
                let mass = if self.dim == 1 {
                    tanh_sinh_ends(-1.0, 1.0, TOL, |_, dl, dh| (dl * dh).powf(e))
                } else {
                    polar_integral(0.0, self.dim, 1.0, 1.0, 0.0)
                        * tanh_sinh_ends(0.0, 1.0, TOL, |s, _, to_one| (to_one * (1.0 + s)).powf(e) * s.powi(self.dim as i32 - 1))
                };
                mass / (b * self.normalizer)
            }
        }
    }

    /// `h_alpha = 1` throughout the ball exactly when `alpha >= d - 2`.
    pub fn is_constant_inside(&self) -> bool {
        !matches!(self.regime, RieszRegime::Subharmonic)
    }
}
