//! Quadrature and special-function helpers shared by the modules.

use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::GaussLegendre;
use statrs::function::gamma::{gamma, ln_gamma};

/// Gauss-Legendre nodes and weights on [-1, 1], cached per degree.
pub fn legendre(n: usize) -> &'static [(f64, f64)] {
    static CACHE: OnceLock<Vec<Vec<(f64, f64)>>> = OnceLock::new();
    const MAX: usize = 128;
    let table = CACHE.get_or_init(|| {
        (0..=MAX)
            .map(|k| match NonZeroUsize::new(k) {
                Some(nz) => GaussLegendre::new(nz).as_node_weight_pairs().to_vec(),
                None => Vec::new(),
            })
            .collect()
    });
    &table[n.clamp(1, MAX)]
}

/// Composite Gauss-Legendre rule with `panels` equal panels of `n` nodes.
pub fn gauss_composite<F: FnMut(f64) -> f64>(a: f64, b: f64, panels: usize, n: usize, mut f: F) -> f64 {
    let rule = legendre(n);
    let w = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * w;
        let mid = lo + 0.5 * w;
        let mut s = 0.0;
        for &(x, wt) in rule {
            s += wt * f(mid + 0.5 * w * x);
        }
        total += 0.5 * w * s;
    }
    total
}

/// Tanh-sinh quadrature; tolerates integrable algebraic endpoint singularities.
pub fn tanh_sinh<F: Fn(f64) -> f64>(a: f64, b: f64, tol: f64, f: F) -> f64 {
    tanh_sinh_ends(a, b, tol, |x, _, _| f(x))
}

/// Tanh-sinh where `f(x, x - a, b - x)` receives both endpoint distances
/// computed without cancellation, for integrands singular at either end.
pub fn tanh_sinh_ends<F: Fn(f64, f64, f64) -> f64>(a: f64, b: f64, tol: f64, f: F) -> f64 {
    if b <= a {
        return 0.0;
    }
    let half = 0.5 * (b - a);
    let hpi = 0.5 * std::f64::consts::PI;
    // contribution of the abscissa pair at +-t
    let pair = |t: f64| -> f64 {
        let s = hpi * t.sinh();
        let q = (-2.0 * s).exp();
        // 1 - tanh(s) = 2q / (1 + q), sech^2(s) = 4q / (1 + q)^2
        let gap = half * 2.0 * q / (1.0 + q);
        let w = half * hpi * t.cosh() * 4.0 * q / ((1.0 + q) * (1.0 + q));
        if gap <= 0.0 || w == 0.0 {
            return 0.0;
        }
        let far = 2.0 * half - gap;
        let v = if t == 0.0 {
            f(a + half, half, half)
        } else {
            f(a + gap, gap, far) + f(b - gap, far, gap)
        };
        if v.is_finite() { w * v } else { 0.0 }
    };
    let tmax = 6.0;
    let mut h = 0.5;
    let mut sum = pair(0.0);
    let mut k = 1;
    while k as f64 * h <= tmax {
        sum += pair(k as f64 * h);
        k += 1;
    }
    let mut prev = sum * h;
    for _ in 0..10 {
        h *= 0.5;
        let mut k = 1;
        while k as f64 * h <= tmax {
            sum += pair(k as f64 * h);
            k += 2;
        }
        let cur = sum * h;
        if (cur - prev).abs() <= tol * cur.abs().max(1e-300) {
            return cur;
        }
        prev = cur;
    }
    prev
}

/// Tanh-sinh on [a, b] split at interior points where the integrand is singular.
pub fn tanh_sinh_split<F: Fn(f64) -> f64>(a: f64, b: f64, cuts: &[f64], tol: f64, f: F) -> f64 {
    let mut pts = vec![a];
    pts.extend(cuts.iter().copied().filter(|&c| c > a && c < b));
    pts.push(b);
    pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    pts.windows(2).map(|w| tanh_sinh(w[0], w[1], tol, &f)).sum()
}

pub fn gamma_fn(x: f64) -> f64 {
    gamma(x)
}

pub fn ln_gamma_fn(x: f64) -> f64 {
    ln_gamma(x)
}

/// Upper Gaussian tail P[Z >= x].
pub fn normal_tail(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(x / std::f64::consts::SQRT_2)
}

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Surface area of the unit sphere in R^d.
pub fn sphere_area(d: usize) -> f64 {
    let h = d as f64 / 2.0;
    2.0 * std::f64::consts::PI.powf(h) / gamma(h)
}

/// Volume of the unit ball in R^d.
pub fn ball_volume(d: usize) -> f64 {
    let h = d as f64 / 2.0;
    std::f64::consts::PI.powf(h) / gamma(h + 1.0)
}

pub fn sinc(t: f64) -> f64 {
    if t.abs() < 1e-8 {
        1.0 - t * t / 6.0
    } else {
        t.sin() / t
    }
}

/// Tensor-product Gauss-Legendre over [0,1]^k.
pub fn cube_quadrature<F: FnMut(&[f64]) -> f64>(k: usize, n: usize, mut f: F) -> f64 {
    if k == 0 {
        return f(&[]);
    }
    let rule = legendre(n);
    let mut idx = vec![0usize; k];
    let mut x = vec![0.0; k];
    let mut total = 0.0;
    loop {
        let mut w = 1.0;
        for (i, &j) in idx.iter().enumerate() {
            let (t, wt) = rule[j];
            x[i] = 0.5 * (t + 1.0);
            w *= 0.5 * wt;
        }
        total += w * f(&x);
        let mut i = 0;
        loop {
            idx[i] += 1;
            if idx[i] < n {
                break;
            }
            idx[i] = 0;
            i += 1;
            if i == k {
                return total;
            }
        }
    }
}

/// Least-squares slope and intercept.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}
