//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.
//! Run with `cargo test -p sgflab --test acceptance -- --nocapture --test-threads 1`.

mod common;

use std::time::Instant;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use sgflab::capacity::*;
use sgflab::fieldsim::*;
use sgflab::persistence::*;
use sgflab::spectral::*;

use common::*;

// ---------------------------------------------------------------- capacity

/// Newtonian kernel `|x|^{-1} / 4` in R^3: the uniform measure on the unit
/// sphere has potential `1/4` on the ball, so the capacity is 4.
fn newtonian_oracle() -> f64 {
    let b = riesz_b(1.0, 3);
    // mean of |x - y|^{-1} over the unit sphere is 1
    1.0 / b
}

#[test]
fn c01_riesz_capacity_oracle() {
    let start = Instant::now();
    let kernel = ClosedKernel::riesz(1.0, 3).unwrap();
    let target = newtonian_oracle();
    let caps: Vec<f64> = [8.0, 16.0, 32.0]
        .iter()
        .map(|n| capacity_ball(&kernel, 1.0, Resolution::Absolute { spacing: 1.0 / n }, &SolverConfig::default()).unwrap().capacity)
        .collect();
    let errs: Vec<f64> = caps.iter().map(|c| (c - target).abs() / target).collect();
    let secs = start.elapsed().as_secs_f64();
    let pass = errs.windows(2).all(|w| w[1] < w[0]) && errs[2] < 0.02 && secs < 60.0;
    report(1, "Riesz capacity oracle", pass, &format!("Cap at h = 1/8, 1/16, 1/32: {caps:.4?} vs {target}; rel err {errs:.4?}; {secs:.1}s"));
}

#[test]
fn c02_riesz_potential_shape() {
    let kernel = ClosedKernel::riesz(1.0, 3).unwrap();
    let sol = capacity_ball(&kernel, 1.0, Resolution::Absolute { spacing: 1.0 / 32.0 }, &SolverConfig::default()).unwrap();
    let inside = sol.potential.iter().map(|h| (h - 1.0).abs()).fold(0.0, f64::max);
    let mut outside: f64 = 0.0;
    for k in 1..=8 {
        let r = 1.0 + k as f64 / 8.0;
        let c = r / 3f64.sqrt();
        for x in [[r, 0.0, 0.0], [c, c, c]] {
            outside = outside.max((sol.potential_at(&kernel, &x) - 1.0 / r).abs());
        }
    }
    let shape_ok = inside < 0.03 && outside < 0.03;

    let k5 = ClosedKernel::riesz(1.0, 5).unwrap();
    let s5 = capacity_ball(&k5, 1.0, Resolution::Absolute { spacing: 0.25 }, &SolverConfig::default()).unwrap();
    let interior: Vec<f64> = [0.0, 0.25, 0.5, 0.75]
        .iter()
        .map(|&r| s5.potential_at(&k5, &[r, 0.0, 0.0, 0.0, 0.0]))
        .collect();
    let transition_ok = interior.iter().all(|&h| h > 1.0 + 1e-3);
    report(
        2,
        "Riesz potential shape",
        shape_ok && transition_ok,
        &format!(
            "d=3: max |h - min(1,|x|^-1)| inside {inside:.4}, outside {outside:.4}; d=5 alpha=1 interior h at r = 0, .25, .5, .75: {interior:.4?}"
        ),
    )
}

fn random_instance(rng: &mut StdRng, i: usize) -> (Box<dyn CovarianceKernel>, Vec<Vec<f64>>) {
    let d = 1 + i % 2;
    let n = 2 + i % 11;
    let kernel: Box<dyn CovarianceKernel> = match i % 3 {
        0 => Box::new(ClosedKernel::new(d, ClosedForm::Exponential { scale: rng.gen_range(0.3..2.0) })),
        1 => Box::new(ClosedKernel::new(d, ClosedForm::Gaussian { scale: rng.gen_range(0.3..1.5) })),
        _ => {
            let mut mu = SpectralMeasure::delta0(rng.gen_range(0.2..1.0), d);
            for _ in 0..3 {
                let f: Vec<f64> = (0..d).map(|_| rng.gen_range(-0.8..0.8)).collect();
                mu = mu.with_pair(f, rng.gen_range(0.05..0.4));
            }
            Box::new(mu)
        }
    };
    let mut pts: Vec<Vec<f64>> = Vec::new();
    while pts.len() < n {
        let p: Vec<f64> = (0..d).map(|_| (rng.gen_range(-2.0f64..2.0) * 16.0).round() / 16.0).collect();
        if !pts.contains(&p) {
            pts.push(p);
        }
    }
    (kernel, pts)
}

/// Minimum of `p^T M p` over the simplex grid with step `1 / steps`.
fn simplex_grid_min(m: &[Vec<f64>], steps: usize) -> f64 {
    let n = m.len();
    let h = 1.0 / steps as f64;
    let energy = |p: &[f64]| -> f64 { (0..n).map(|i| (0..n).map(|j| p[i] * m[i][j] * p[j]).sum::<f64>()).sum() };
    let mut best = f64::INFINITY;
    match n {
        2 => {
            for a in 0..=steps {
                let x = a as f64 * h;
                best = best.min(energy(&[x, 1.0 - x]));
            }
        }
        3 => {
            for a in 0..=steps {
                for b in 0..=steps - a {
                    let (x, y) = (a as f64 * h, b as f64 * h);
                    best = best.min(energy(&[x, y, 1.0 - x - y]));
                }
            }
        }
        4 => {
            for a in 0..=steps {
                for b in 0..=steps - a {
                    for c in 0..=steps - a - b {
                        let (x, y, z) = (a as f64 * h, b as f64 * h, c as f64 * h);
                        best = best.min(energy(&[x, y, z, 1.0 - x - y - z]));
                    }
                }
            }
        }
        _ => unreachable!(),
    }
    best
}

#[test]
fn c03_duality_and_brute_force() {
    let mut rng = StdRng::seed_from_u64(2024);
    let cfg = SolverConfig::default();
    let mut failures = Vec::new();
    let mut worst_brute: f64 = 0.0;
    let mut brute_count = 0;
    for i in 0..20 {
        let (kernel, pts) = random_instance(&mut rng, i);
        let dom = DiscreteDomain::from_points(pts.clone(), 1.0 / 16.0).unwrap();
        let gram = GramMatrix::assemble(kernel.as_ref(), &dom, false).unwrap();
        let sol = equilibrium_measure(&gram, &cfg).unwrap();
        let rep = dual_check(&sol, &gram, 1e-3).unwrap();
        if !rep.holds || rep.min_potential < 1.0 - 1e-3 {
            failures.push(format!("instance {i}: residual {:.2e} bound {:.2e} min h {:.6}", rep.norm_residual, rep.gap_bound, rep.min_potential));
        }
        if pts.len() <= 4 {
            let m: Vec<Vec<f64>> = pts
                .iter()
                .map(|x| pts.iter().map(|y| kernel.eval(&x.iter().zip(y).map(|(a, b)| a - b).collect::<Vec<_>>())).collect())
                .collect();
            let brute = simplex_grid_min(&m, 1000);
            let diff = (brute - sol.energy).abs();
            worst_brute = worst_brute.max(diff);
            brute_count += 1;
            if diff > 1e-4 {
                failures.push(format!("instance {i}: brute force {brute:.8} vs solver {:.8}", sol.energy));
            }
        }
    }
    report(
        3,
        "duality",
        failures.is_empty(),
        &format!("20 instances, {brute_count} brute-forced (worst energy diff {worst_brute:.2e}); failures: {failures:?}"),
    );
}

#[test]
fn c04_capacity_bracket() {
    let pair = build_truncation(0.5, 80.0).unwrap();
    let cfg = SolverConfig::default();
    let r25 = riesz_measure(0.25, 1, 1.0 / 64.0, 8.0).unwrap();
    let r50 = riesz_measure(0.5, 1, 1.0 / 64.0, 8.0).unwrap();
    let mixed = r50
        .plus(&SpectralMeasure::delta0(0.5, 1))
        .unwrap()
        .plus(&SpectralMeasure::cosine_pair(vec![0.3], 0.25))
        .unwrap();
    let mut lines = Vec::new();
    let mut pass = true;
    for (name, mu) in [("riesz 1/4", &r25), ("riesz 1/2", &r50), ("mixed", &mixed)] {
        for t in [2.0, 4.0, 8.0, 16.0] {
            let sol = capacity_ball(mu, t, Resolution::PerRadius { cells: 16 }, &cfg).unwrap();
            let b = bracket_check(mu, &pair, t, sol.capacity, sol.relative_gap_bound());
            pass &= b.holds;
            lines.push(format!("{name} T={t}: {:.3} <= {:.3} <= {:.3}", b.lower, b.capacity, b.upper));
        }
    }
    report(4, "capacity bracket", pass, &lines.join("; "));
}

// ------------------------------------------------------------- persistence

fn iid_sampler_points(n: usize) -> Vec<Vec<f64>> {
    (0..n).map(|k| vec![k as f64]).collect()
}

#[test]
fn c05_persistence_exactness() {
    let start = Instant::now();
    let mut lines = Vec::new();
    let mut pass = true;
    for n in [4usize, 8, 10] {
        let spec = atomize(&SpectralMeasure::iid_lattice(n), 0.1);
        let sm = FieldSampler::new(&spec, &iid_sampler_points(n)).unwrap();
        let e = persist_naive(&sm, 0.0, 100_000, 11 + n as u64).unwrap();
        let exact = n as f64 * std::f64::consts::LN_2;
        let z = (e.theta_hat - exact) / e.se_theta;
        pass &= z.abs() <= 3.0;
        lines.push(format!("N={n}: theta {:.4} +- {:.4} vs {exact:.4} (z {z:.2})", e.theta_hat, e.se_theta));
    }
    let spec = atomize(&SpectralMeasure::delta0(1.0, 1), 0.1);
    let sm = FieldSampler::new(&spec, &iid_sampler_points(5)).unwrap();
    let e = persist_naive(&sm, 0.0, 100_000, 5).unwrap();
    let z = (e.p_hat - 0.5) / e.se_p;
    pass &= z.abs() <= 3.0;
    lines.push(format!("delta_0: p {:.4} +- {:.4} (z {z:.2})", e.p_hat, e.se_p));
    let secs = start.elapsed().as_secs_f64();
    pass &= secs < 30.0;
    lines.push(format!("{secs:.1}s"));
    report(5, "persistence exactness", pass, &lines.join("; "));
}

struct IsInstance {
    name: String,
    spec: AtomizedSpectrum,
    points: Vec<Vec<f64>>,
    tilt_level: f64,
}

fn equilibrium_on(spec: &AtomizedSpectrum, points: &[Vec<f64>]) -> EquilibriumSolution {
    let kernel = spec.to_measure();
    let dom = DiscreteDomain::from_points(points.to_vec(), 1.0).unwrap();
    let gram = GramMatrix::assemble(&kernel, &dom, false).unwrap();
    equilibrium_measure(&gram, &SolverConfig::default()).unwrap()
}

fn importance_instances() -> Vec<IsInstance> {
    let mut v = Vec::new();
    for n in [4usize, 8, 10] {
        v.push(IsInstance {
            name: format!("iid N={n}"),
            spec: atomize(&SpectralMeasure::iid_lattice(n), 0.1),
            points: iid_sampler_points(n),
            tilt_level: 1.0,
        });
    }
    v.push(IsInstance {
        name: "delta_0".into(),
        spec: atomize(&SpectralMeasure::delta0(1.0, 1), 0.1),
        points: iid_sampler_points(5),
        tilt_level: 2.0,
    });
    let hyp = SingularityHypothesis { alpha: 0.5, m: 1.0 };
    for t in [4.0, 8.0] {
        let dom = DiscreteDomain::lattice_ball(1, t).unwrap();
        v.push(IsInstance {
            name: format!("singular T={t}"),
            spec: atomize(&singular_lattice_instance(), 1.0 / 512.0),
            points: dom.points().to_vec(),
            tilt_level: hyp.ell(1, t),
        });
    }
    v
}

#[test]
fn c06_importance_sampling() {
    let mut lines = Vec::new();
    let mut pass = true;
    for inst in importance_instances() {
        let sm = FieldSampler::new(&inst.spec, &inst.points).unwrap();
        let sol = equilibrium_on(&inst.spec, &inst.points);
        let tilt = TiltSpec::from_equilibrium(&sm, &sol, inst.tilt_level).unwrap();
        let w = persist_importance(&sm, 0.0, &tilt, 10_000, 101).unwrap();
        let zw = (w.weight_mean - 1.0) / w.weight_se;
        let imp = persist_importance(&sm, 0.0, &tilt, 100_000, 202).unwrap();
        let nai = persist_naive(&sm, 0.0, 100_000, 303).unwrap();
        let combined = (imp.se_theta.powi(2) + nai.se_theta.powi(2)).sqrt();
        let za = (imp.theta_hat - nai.theta_hat) / combined;
        let both_reliable = !imp.rare && !nai.rare;
        pass &= zw.abs() <= 4.0;
        if both_reliable {
            pass &= za.abs() <= 3.0;
        }
        let mut line = format!(
            "{} (tilt {:.3}): E[W] {:.4} (z {zw:.2}); theta imp {:.4} naive {:.4} (z {za:.2}); se_p imp {:.2e} naive {:.2e}",
            inst.name, inst.tilt_level, w.weight_mean, imp.theta_hat, nai.theta_hat, imp.se_p, nai.se_p
        );
        if inst.name == "iid N=10" {
            let smaller = imp.se_p < nai.se_p;
            pass &= smaller;
            line.push_str(&format!(" variance ratio {:.3}", (imp.se_p / nai.se_p).powi(2)));
        }
        lines.push(line);
    }
    report(6, "importance sampling", pass, &lines.join("; "));
}

#[test]
fn c07_capacity_large_deviation() {
    // K(x) = cos(2 pi x) at separation 0.4: correlation cos(0.8 pi) < 0
    let mu = SpectralMeasure::cosine_pair(vec![1.0], 0.5);
    let spec = atomize(&mu, 0.1);
    let pts = vec![vec![0.0], vec![0.4]];
    let r = (0.8 * std::f64::consts::PI).cos();
    let sm = FieldSampler::new(&spec, &pts).unwrap();
    let sol = equilibrium_on(&spec, &pts);
    let cap_exact = 2.0 / (1.0 + r);
    let low = persist_naive(&sm, 0.0, 100_000, 7).unwrap();
    let mut lines = vec![format!("Cap {:.4} (exact {cap_exact:.4})", sol.capacity)];
    let mut pass = (sol.capacity - cap_exact).abs() < 1e-6 * cap_exact;
    for l in [1.0, 2.0, 4.0, 6.0] {
        let oracle = -bivariate_orthant(l, r).ln();
        let tilt = TiltSpec::from_equilibrium(&sm, &sol, l).unwrap();
        let est = persist_importance(&sm, l, &tilt, 100_000, 8).unwrap();
        let br = bracket_persistence(sol.capacity, &low, l).unwrap();
        let contains = br.contains(oracle, 0.0) && br.contains(est.theta_hat, 3.0);
        let mc_ok = (est.theta_hat - oracle).abs() <= 3.0 * est.se_theta + 1e-9;
        pass &= contains && mc_ok;
        let mut line = format!(
            "l={l}: oracle {oracle:.4}, MC {:.4} +- {:.4}, bracket [{:.3}, {:.3}]",
            est.theta_hat,
            est.se_theta,
            br.lower,
            br.upper.unwrap_or(f64::INFINITY)
        );
        if l == 6.0 {
            let rel_mc = est.theta_hat / (l * l) / (0.5 * sol.capacity) - 1.0;
            let rel_oracle = oracle / (l * l) / (0.5 * sol.capacity) - 1.0;
            pass &= rel_mc.abs() <= 0.10 && rel_oracle.abs() <= 0.10;
            line.push_str(&format!(", theta/l^2 over Cap/2 - 1: MC {rel_mc:.4}, oracle {rel_oracle:.4}"));
        }
        lines.push(line);
    }
    report(7, "capacity as large deviation rate", pass, &lines.join("; "));
}

fn pairing_variance(spec: &AtomizedSpectrum, sol: &EquilibriumSolution, n: usize, seed: u64) -> (f64, f64) {
    let sm = FieldSampler::new(spec, &sol.points).unwrap();
    let (mut c, mut v) = (Vec::new(), Vec::new());
    let xs: Vec<f64> = (0..n as u64)
        .map(|r| {
            sm.coefficients(seed, r, &mut c);
            sm.values(&c, &mut v);
            v.iter().zip(&sol.nu).map(|(a, b)| a * b).sum()
        })
        .collect();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (var, var * (2.0 / (n - 1) as f64).sqrt())
}

#[test]
fn c08_variance_identity() {
    let cfg = SolverConfig::default();
    let mut lines = Vec::new();
    let mut pass = true;

    let singular = atomize(&singular_lattice_instance(), 1.0 / 512.0);
    let k1 = singular.to_measure();
    let s1 = capacity_ball(&k1, 8.0, Resolution::Lattice, &cfg).unwrap();

    let mu2 = SpectralMeasure::delta0(0.3, 2)
        .with_pair(vec![0.2, 0.1], 0.2)
        .with_pair(vec![0.05, -0.3], 0.15)
        .with_pair(vec![0.4, 0.35], 0.1);
    let mixed = atomize(&mu2, 0.1);
    let k2 = mixed.to_measure();
    let dom2 = DiscreteDomain::ball(2, 2.0, 0.5).unwrap();
    let s2 = equilibrium_measure(&GramMatrix::assemble(&k2, &dom2, false).unwrap(), &cfg).unwrap();

    for (name, spec, sol) in [("singular lattice T=8", &singular, &s1), ("2-d atomic", &mixed, &s2)] {
        let (var, se) = pairing_variance(spec, sol, 10_000, 17);
        let target = 1.0 / sol.capacity;
        let z = (var - target) / se;
        pass &= z.abs() <= 4.0;
        lines.push(format!("{name}: Var {var:.5} +- {se:.5} vs 1/Cap {target:.5} (z {z:.2})"));
    }
    report(8, "variance identity", pass, &lines.join("; "));
}

#[test]
fn c09_theta_trend() {
    let spec = atomize(&singular_lattice_instance(), 1.0 / 512.0);
    let hyp = SingularityHypothesis { alpha: 0.5, m: 1.0 };
    let cfg = TrendConfig {
        resolution: Resolution::Lattice,
        level: 0.0,
        n_samples: 100_000,
        seed: 1,
        estimator: Estimator::Importance { level: None },
        solver: SolverConfig::default(),
    };
    let rows = theta_trend(&spec, &hyp, &[4.0, 8.0, 16.0], &cfg).unwrap();
    let ratios: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
    let last = *ratios.last().unwrap();
    let dev: Vec<f64> = ratios.iter().map(|r| (r - last).abs()).collect();
    let pass = rows.len() == 3
        && ratios.iter().all(|r| r.is_finite() && *r > 0.0)
        && dev.windows(2).all(|w| w[1] <= w[0]);
    let detail: Vec<String> = rows
        .iter()
        .map(|r| format!("T={}: Cap {:.4} theta {:.4} ratio {:.4} +- {:.4} (ESS {:.0})", r.t, r.capacity, r.theta_hat, r.ratio, r.ratio_se, r.ess))
        .collect();
    report(9, "theta trend", pass, &format!("{}; deviations from last {dev:.4?}", detail.join("; ")));
}

#[test]
fn c10_entropic_repulsion_trend() {
    let spec = atomize(&singular_lattice_instance(), 1.0 / 512.0);
    let hyp = SingularityHypothesis { alpha: 0.5, m: 1.0 };
    let cfg = RepulsionConfig { seed: 1, ..RepulsionConfig::default() };
    let rows = repulsion_experiment(&spec, &hyp, &[4.0, 8.0, 16.0], TestMeasure::Tent, &cfg).unwrap();
    let enough = rows.iter().all(|r| !r.skipped && r.accepted >= 200);
    let positive = rows.iter().all(|r| r.mean_pairing > 0.0);
    let gaps: Vec<f64> = rows.iter().map(|r| r.gap).collect();
    let decreasing = gaps.windows(2).all(|w| w[1] < w[0]);
    let detail: Vec<String> = rows
        .iter()
        .map(|r| {
            format!(
                "T={}: accepted {}/{} mean {:.4} +- {:.4} l_T {:.4} <h,eta> {:.4} gap {:.4} +- {:.4}",
                r.t, r.accepted, r.draws, r.mean_pairing, r.se_pairing, r.ell_t, r.reference, r.gap, r.gap_se
            )
        })
        .collect();
    report(10, "entropic repulsion trend", enough && positive && decreasing, &detail.join("; "));
}

// ---------------------------------------------------------- constructions

#[test]
fn c11_counterexamples() {
    let pair = build_truncation(0.5, 80.0).unwrap();
    let irr = irregular_measure(0.5, 0.9, &[3, 5, 7], &pair).unwrap();
    let (i, inner, outer) = irr.jump_radii()[0];
    let res = Resolution::Absolute { spacing: 0.125 };
    let cfg = SolverConfig::default();
    let a = capacity_ball(&irr.measure, inner, res, &cfg).unwrap();
    let b = capacity_ball(&irr.measure, outer, res, &cfg).unwrap();
    let ratio = b.capacity / a.capacity;
    let jump_ok = ratio > 2.0;

    let recipe = CantorRecipe::from_sequence(&[1, 2], 2).unwrap();
    let ends = recipe.left_endpoints();
    let masses: Vec<f64> = (4..8).map(|k| recipe.dyadic_mass(k, 2)).collect();
    let cantor_ok = ends == vec![1.0, 1.25, 1.5, 1.75] && masses.iter().all(|&m| m == 0.25);
    report(
        11,
        "counterexamples",
        jump_ok && cantor_ok,
        &format!(
            "irregular scale {i}: Cap(B({inner:.3})) {:.4}, Cap(B({outer})) {:.4}, ratio {ratio:.3}; Cantor J=[1,2] depth 2 intervals {ends:?} masses {masses:?}",
            a.capacity, b.capacity
        ),
    );
}

/// `(2/pi) int_0^inf K(x) sin(a x) / x dx` with `a = 2 pi delta`: Gauss-Legendre
/// over whole periods up to `X`, then the integration-by-parts tail
/// `g(X)/a - g''(X)/a^3` with `g = K/x` (at whole periods `sin(aX) = 0`).
fn ball_mass_oracle(k: &dyn Fn(f64) -> f64, delta: f64) -> f64 {
    let a = 2.0 * std::f64::consts::PI * delta;
    let period = 2.0 * std::f64::consts::PI / a;
    let periods = 2000usize;
    let x_end = period * periods as f64;
    let body = integrate(0.0, period, 200, |x| if x == 0.0 { a * k(0.0) } else { k(x) * (a * x).sin() / x })
        + integrate(period, x_end, periods * 2, |x| k(x) * (a * x).sin() / x);
    let g = |x: f64| k(x) / x;
    let h = 1e-3 * x_end;
    let g2 = (g(x_end + h) - 2.0 * g(x_end) + g(x_end - h)) / (h * h);
    let tail = g(x_end) / a - g2 / a.powi(3);
    2.0 / std::f64::consts::PI * (body + tail)
}

#[test]
fn c12_tauberian() {
    let k = |x: f64| (1.0 + x.abs()).powf(-0.5);
    let t = 64.0;
    let oracle = ball_mass_oracle(&k, 1.0 / t);
    let hyp = TauberianHypothesis::Kernel(Box::new(k));
    let w = kernel_normalized_w(&k, 0.5, 1);
    let row = tauberian_check(&hyp, 0.5, &w, &[t]).unwrap().remove(0);
    let pipeline_ok = (row.ball_mass - oracle).abs() < 1e-6 * oracle;
    // K(T) ~ B T^{-1/2} w(T) and mu[B(1/T)] ~ T^{-1/2} w(T)
    let ratio = oracle * riesz_b(0.5, 1) / k(t);
    let pass = pipeline_ok && (ratio - 1.0).abs() <= 0.05;
    report(
        12,
        "Tauberian",
        pass,
        &format!(
            "T=64: mu[B(1/T)] oracle {oracle:.6} (library {:.6}) vs K(T)/B = {:.6}, ratio {ratio:.4}",
            row.ball_mass,
            k(t) / riesz_b(0.5, 1)
        ),
    );
}
