//! Oracles and fixtures shared by the integration tests. Everything here is
//! computed independently of the library's own quadrature helpers.
#![allow(dead_code)]

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use sgflab::spectral::{CellProfile, DensityGrid, SpectralMeasure};
use statrs::distribution::{ContinuousCDF, Normal};

pub fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).unwrap()
}

/// `P[Z >= x]`.
pub fn upper_tail(x: f64) -> f64 {
    std_normal().sf(x)
}

pub fn normal_density(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Composite Gauss-Legendre on `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(a: f64, b: f64, panels: usize, f: F) -> f64 {
    let rule = GaussLegendre::new(NonZeroUsize::new(30).unwrap());
    let w = (b - a) / panels as f64;
    (0..panels).map(|p| rule.integrate(a + p as f64 * w, a + (p + 1) as f64 * w, &f)).sum()
}

/// `P[X >= l, Y >= l]` for unit-variance Gaussians with correlation `r`.
pub fn bivariate_orthant(l: f64, r: f64) -> f64 {
    let s = (1.0 - r * r).sqrt();
    let top = l.max(0.0) + 12.0;
    integrate(l, top, 400, |x| normal_density(x) * upper_tail((l - r * x) / s))
}

/// `P[X_1 >= 0, X_2 >= 0, X_3 >= 0]` for a unit-variance trivariate Gaussian,
/// by conditioning on `X_1` and integrating the bivariate orthant of the rest.
pub fn trivariate_orthant(r12: f64, r13: f64, r23: f64) -> f64 {
    // (X2, X3) | X1 = x has means (r12 x, r13 x), variances 1 - r^2 and
    // correlation (r23 - r12 r13) / sqrt((1 - r12^2)(1 - r13^2)).
    let (s2, s3) = ((1.0 - r12 * r12).sqrt(), (1.0 - r13 * r13).sqrt());
    let rho = (r23 - r12 * r13) / (s2 * s3);
    let sr = (1.0 - rho * rho).sqrt();
    integrate(0.0, 12.0, 120, |x| {
        let (a2, a3) = (-r12 * x / s2, -r13 * x / s3);
        // P[U >= a2, V >= a3] with corr rho, by integrating over U.
        let inner = integrate(a2, a2.max(0.0) + 12.0, 60, |u| normal_density(u) * upper_tail((a3 - rho * u) / sr));
        normal_density(x) * inner
    })
}

/// Lattice field on Z with spectral density `c |lambda|^{-1/2}` on the torus,
/// `c = 1 / (2 sqrt 2)` so the total mass is one. Singularity order 1/2, `m = 1`.
pub fn singular_lattice_instance() -> SpectralMeasure {
    let n = 512usize;
    let step = 1.0 / n as f64;
    let c = 1.0 / (2.0 * 2f64.sqrt());
    let masses = (0..n)
        .map(|i| {
            let lo = (2.0 * i as f64 - n as f64) * 0.5 * step;
            let hi = lo + step;
            let (p, q) = if lo >= 0.0 { (lo, hi) } else { (-hi, -lo) };
            c / 0.5 * (q.sqrt() - p.sqrt())
        })
        .collect();
    let grid = DensityGrid {
        step,
        counts: vec![n],
        masses,
        profile: CellProfile::RadialPower { coefficient: c, exponent: -0.5 },
    };
    SpectralMeasure::new(1, true).with_density(grid).unwrap()
}

/// One line of the acceptance log, then the verdict.
pub fn report(id: u32, name: &str, pass: bool, detail: &str) {
    println!("criterion {id:>2} {} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {id} ({name}) failed: {detail}");
}
