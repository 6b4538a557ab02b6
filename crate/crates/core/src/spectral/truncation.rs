use std::f64::consts::PI;

use crate::error::{LabError, Result};
use crate::numerics::{gauss_composite, legendre, normal_pdf};

const PANELS: usize = 256;
const NODES: usize = 16;

/// Compactly supported bump `xi` on `[-1, 1]` with strictly positive Fourier
/// transform `zeta` of stretched-exponential decay (one-dimensional).
///
/// `xi = (xi' * xi') g` with `xi'(x) = exp(-b / (1 - 4x^2)^a)` on `|x| < 1/2`
/// and `g` the standard normal density. The spatial evaluator is scaled so that
/// `xi(0) = 1`; `zeta` is scaled so that `zeta(0) = 1`. The two differ from an
/// exact Fourier pair by `pair_constant`.
#[derive(Clone, Debug)]
pub struct TruncationPair {
    pub v: f64,
    pub a: f64,
    pub b: f64,
    /// Fitted constant `c` in `zeta(x) <= c exp(-|x|^v)` over `[0, certified_range]`.
    pub decay_constant: f64,
    pub certified_range: f64,
    /// `int xi / xi(0)`, so that `F[xi] = pair_constant * zeta`.
    pub pair_constant: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    xi0: f64,
    mass: f64,
}

impl TruncationPair {
    fn bump(&self, x: f64) -> f64 {
        let t = 1.0 - 4.0 * x * x;
        if t <= 0.0 {
            0.0
        } else {
            (-self.b / t.powf(self.a)).exp()
        }
    }

    fn raw_xi(&self, x: f64) -> f64 {
        let x = x.abs();
        if x >= 1.0 {
            return 0.0;
        }
        let conv = gauss_composite(x - 0.5, 0.5, 16, 20, |y| self.bump(y) * self.bump(x - y));
        conv * normal_pdf(x)
    }

    /// Spatial bump, `xi(0) = 1`, supported in `[-1, 1]`.
    pub fn xi(&self, x: f64) -> f64 {
        self.raw_xi(x) / self.xi0
    }

    /// `zeta(lambda) = F[xi](lambda) / F[xi](0)`.
    pub fn zeta(&self, lambda: f64) -> f64 {
        let w = 2.0 * PI * lambda;
        let s: f64 = self.nodes.iter().zip(&self.weights).map(|(&x, &wt)| wt * (w * x).cos()).sum();
        2.0 * s / self.mass
    }

    /// Spectral truncation `phi_s(lambda) = zeta(s lambda / 2)`, whose Fourier
    /// transform is supported in `B(s/2)` and has unit mass.
    pub fn phi(&self, s: f64, lambda: f64) -> f64 {
        self.zeta(0.5 * s * lambda)
    }

    /// `F[phi_s](x) = (2/s) xi(2x/s) / int xi`.
    pub fn phi_transform(&self, s: f64, x: f64) -> f64 {
        2.0 / s * self.raw_xi(2.0 * x / s) / self.mass
    }

    /// Worst ratio `zeta(x) / exp(-|x|^v)` on a grid of `[0, range]`.
    pub fn decay_ratio(&self, range: f64, samples: usize) -> (f64, f64) {
        let mut worst = (0.0, 0.0);
        for i in 0..=samples {
            let x = range * i as f64 / samples as f64;
            let r = self.zeta(x) / (-x.powf(self.v)).exp();
            if r > worst.0 {
                worst = (r, x);
            }
        }
        worst
    }
}

/// Builds the pair with `a = b = 1` and certifies the decay bound on `[0, range]`.
///
/// The fitted constant is the worst ratio `zeta(x) exp(|x|^v)` on the range.
/// Certification requires that worst case to occur in the first half of the
/// range, the final quarter to stay below a tenth of it, and `zeta` to stay
/// nonnegative up to quadrature noise.
pub fn build_truncation(v: f64, range: f64) -> Result<TruncationPair> {
    if !(v > 0.0 && v < 1.0) {
        return Err(LabError::Domain(format!("v = {v} must lie in (0, 1)")));
    }
    let mut pair = TruncationPair {
        v,
        a: 1.0,
        b: 1.0,
        decay_constant: 0.0,
        certified_range: range,
        pair_constant: 0.0,
        nodes: Vec::new(),
        weights: Vec::new(),
        xi0: 1.0,
        mass: 1.0,
    };
    let rule = legendre(NODES);
    let width = 1.0 / PANELS as f64;
    for p in 0..PANELS {
        let mid = (p as f64 + 0.5) * width;
        for &(t, w) in rule {
            let x = mid + 0.5 * width * t;
            pair.nodes.push(x);
            pair.weights.push(0.5 * width * w * pair.raw_xi(x));
        }
    }
    pair.xi0 = pair.raw_xi(0.0);
    pair.mass = 2.0 * pair.weights.iter().sum::<f64>();
    pair.pair_constant = pair.mass / pair.xi0;
    let samples = 4000;
    let (c, argmax) = pair.decay_ratio(range, samples);
    let mut tail = 0.0f64;
    let mut lowest = f64::INFINITY;
    for i in 0..=samples {
        let x = range * i as f64 / samples as f64;
        let z = pair.zeta(x);
        lowest = lowest.min(z);
        if i >= 3 * samples / 4 {
            tail = tail.max(z.abs() / (-x.powf(v)).exp());
        }
    }
    if !c.is_finite() || argmax > 0.5 * range || tail > 0.1 * c || lowest < -1e-10 {
        return Err(LabError::Construction(format!(
            "decay bound not certified on [0, {range}]: worst ratio {c:.3e} at x = {argmax:.3}, final-quarter ratio {tail:.3e}, min zeta {lowest:.3e}"
        )));
    }
    pair.decay_constant = c;
    Ok(pair)
}
