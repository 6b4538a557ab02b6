use std::f64::consts::PI;

use crate::numerics::gauss_composite;

/// Both sides of `F[Dis_{1/t} g] = t Per_t(F[g])` on a frequency grid.
#[derive(Clone, Debug)]
pub struct PoissonCheck {
    pub lambdas: Vec<f64>,
    /// `sum_{z in Z/t} g(z) exp(-2 pi i lambda z)` as (re, im).
    pub discretized: Vec<(f64, f64)>,
    /// `t sum_{k in tZ} F[g](lambda + k)` as (re, im).
    pub periodized: Vec<(f64, f64)>,
    pub residual: f64,
    /// `max |g|` at the edge of the sampled window.
    pub tail_estimate: f64,
    pub warning: Option<String>,
}

/// Sampled test function: `g` is treated as zero outside `[-support, support]`
/// and `F[g]` as zero beyond `|lambda| > freq_cut`.
pub struct SampledFunction<'a> {
    pub g: &'a dyn Fn(f64) -> f64,
    pub support: f64,
    pub freq_cut: f64,
}

impl SampledFunction<'_> {
    /// `F[g](lambda)` by composite Gauss-Legendre over the support.
    pub fn transform(&self, lambda: f64) -> (f64, f64) {
        let l = self.support;
        let panels = (8.0 * l * (1.0 + lambda.abs())).ceil().max(16.0) as usize;
        let re = gauss_composite(-l, l, panels, 16, |x| (self.g)(x) * (2.0 * PI * lambda * x).cos());
        let im = -gauss_composite(-l, l, panels, 16, |x| (self.g)(x) * (2.0 * PI * lambda * x).sin());
        (re, im)
    }

    /// `F[Dis_{1/t} g](lambda)`.
    pub fn discretized(&self, t: f64, lambda: f64) -> (f64, f64) {
        let n = (self.support * t).floor() as i64;
        let (mut re, mut im) = (0.0, 0.0);
        for k in -n..=n {
            let z = k as f64 / t;
            let gz = (self.g)(z);
            re += gz * (2.0 * PI * lambda * z).cos();
            im -= gz * (2.0 * PI * lambda * z).sin();
        }
        (re, im)
    }

    /// `sum_k c_k F[g](lambda + k p)` over the shifts with `|lambda + k p| <= freq_cut`.
    fn shifted_sum(&self, lambda: f64, p: f64, sign: impl Fn(i64) -> f64) -> (f64, f64) {
        let kmax = ((self.freq_cut + lambda.abs()) / p).ceil() as i64 + 1;
        let (mut re, mut im) = (0.0, 0.0);
        for k in -kmax..=kmax {
            let nu = lambda + k as f64 * p;
            if nu.abs() > self.freq_cut {
                continue;
            }
            let (a, b) = self.transform(nu);
            re += sign(k) * a;
            im += sign(k) * b;
        }
        (re, im)
    }

    fn tail(&self) -> f64 {
        (self.g)(self.support).abs().max((self.g)(-self.support).abs())
    }
}

/// Evaluates both sides of the Poisson identity at `n` frequencies in `[0, t)`.
pub fn periodize_and_discretize(f: &SampledFunction, t: f64, n: usize, tol: f64) -> PoissonCheck {
    let lambdas: Vec<f64> = (0..n).map(|i| t * i as f64 / n as f64).collect();
    let discretized: Vec<(f64, f64)> = lambdas.iter().map(|&l| f.discretized(t, l)).collect();
    let periodized: Vec<(f64, f64)> = lambdas
        .iter()
        .map(|&l| {
            let (a, b) = f.shifted_sum(l, t, |_| 1.0);
            (t * a, t * b)
        })
        .collect();
    let residual = discretized
        .iter()
        .zip(&periodized)
        .map(|(p, q)| (p.0 - q.0).hypot(p.1 - q.1))
        .fold(0.0, f64::max);
    let tail_estimate = f.tail();
    let warning = (tail_estimate > tol)
        .then(|| format!("sampled window truncates g: edge value {tail_estimate:.3e} exceeds {tol:.1e}"));
    PoissonCheck { lambdas, discretized, periodized, residual, tail_estimate, warning }
}

/// Largest deviation between `F[Dis_{1/T} g] - F[Dis_{2/T} g]` and
/// `(T/2) sum_k (-1)^k F[g](lambda - k T/2)` over the supplied frequencies.
pub fn alternating_identity(f: &SampledFunction, big_t: f64, lambdas: &[f64]) -> f64 {
    lambdas
        .iter()
        .map(|&l| {
            let a = f.discretized(big_t, l);
            let b = f.discretized(big_t / 2.0, l);
            let (re, im) = f.shifted_sum(l, big_t / 2.0, |k| if k % 2 == 0 { 1.0 } else { -1.0 });
            let lhs = (a.0 - b.0, a.1 - b.1);
            let rhs = (0.5 * big_t * re, 0.5 * big_t * im);
            (lhs.0 - rhs.0).hypot(lhs.1 - rhs.1)
        })
        .fold(0.0, f64::max)
}
