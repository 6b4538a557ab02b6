//! Spectral synthesis: covariance replication, decomposition and tilting.

mod common;

use proptest::prelude::*;
use sgflab::capacity::PointMeasure;
use sgflab::fieldsim::*;
use sgflab::spectral::*;

fn empirical_covariance(sampler: &FieldSampler, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let k = sampler.points().len();
    let mut acc = vec![vec![0.0; k]; k];
    let (mut c, mut v) = (Vec::new(), Vec::new());
    for r in 0..n as u64 {
        sampler.coefficients(seed, r, &mut c);
        sampler.values(&c, &mut v);
        for i in 0..k {
            for j in 0..k {
                acc[i][j] += v[i] * v[j];
            }
        }
    }
    acc.iter().map(|row| row.iter().map(|s| s / n as f64).collect()).collect()
}

#[test]
fn covariance_is_replicated() {
    let mu = SpectralMeasure::delta0(0.4, 1)
        .with_pair(vec![0.15], 0.2)
        .with_pair(vec![0.4], 0.1);
    let spec = atomize(&mu, 0.01);
    let pts: Vec<Vec<f64>> = (0..5).map(|k| vec![0.7 * k as f64]).collect();
    let sm = FieldSampler::new(&spec, &pts).unwrap();
    let n = 40_000;
    let emp = empirical_covariance(&sm, n, 5);
    for i in 0..pts.len() {
        for j in 0..pts.len() {
            let exact = mu.covariance(&[pts[i][0] - pts[j][0]]);
            // Var of a product of two unit-scale Gaussians is at most 2
            let se = (2.0 * mu.total_mass().powi(2) / n as f64).sqrt();
            assert!((emp[i][j] - exact).abs() < 4.5 * se, "({i},{j}): {} vs {exact}", emp[i][j]);
        }
    }
}

#[test]
fn density_atomization_bias_is_bounded() {
    let grid = DensityGrid::from_values(1.0 / 16.0, vec![32], &vec![0.5; 32]).unwrap();
    let mu = SpectralMeasure::new(1, false).with_density(grid).unwrap();
    let spec = atomize(&mu, 1.0 / 64.0);
    assert!((spec.total_mass() - 1.0).abs() < 1e-12);
    let bound = spec.covariance_bias_bound(3.0);
    for x in [0.25, 1.0, 3.0] {
        assert!((spec.covariance(&[x]) - mu.covariance(&[x])).abs() <= bound + 1e-9);
    }
}

#[test]
fn decomposition_sums_to_the_joint_law() {
    // f1 + f2 with independent parts has covariance K1 + K2
    let mu1 = SpectralMeasure::delta0(0.5, 1);
    let mu2 = SpectralMeasure::cosine_pair(vec![0.25], 0.25);
    let pts = vec![vec![0.0], vec![1.0], vec![2.0]];
    let n = 20_000;
    let mut acc = [[0.0; 3]; 3];
    for seed in 0..n {
        let (a, b) = decompose_sample(&mu1, &mu2, 0.1, &pts, seed).unwrap();
        let s: Vec<f64> = a.values.iter().zip(&b.values).map(|(x, y)| x + y).collect();
        for i in 0..3 {
            for j in 0..3 {
                acc[i][j] += s[i] * s[j] / n as f64;
            }
        }
    }
    let joint = mu1.plus(&mu2).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            let exact = joint.covariance(&[pts[i][0] - pts[j][0]]);
            assert!((acc[i][j] - exact).abs() < 0.05, "({i},{j}) {} vs {exact}", acc[i][j]);
        }
    }
}

#[test]
fn same_seed_same_field() {
    let spec = atomize(&SpectralMeasure::iid_lattice(8), 0.1);
    let pts: Vec<Vec<f64>> = (0..8).map(|k| vec![k as f64]).collect();
    assert_eq!(sample_field(&spec, &pts, 3).unwrap(), sample_field(&spec, &pts, 3).unwrap());
    assert_ne!(sample_field(&spec, &pts, 3).unwrap().values, sample_field(&spec, &pts, 4).unwrap().values);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn tilt_shifts_by_the_potential(
        freqs in prop::collection::vec((-0.5f64..0.5, 0.05f64..0.5), 1..5),
        level in 0.0f64..3.0,
        seed in 0u64..1000,
    ) {
        let mu = freqs.iter().fold(SpectralMeasure::delta0(0.3, 1), |m, (f, w)| m.with_pair(vec![*f], *w));
        let spec = atomize(&mu, 0.1);
        let pts: Vec<Vec<f64>> = (0..4).map(|k| vec![0.5 * k as f64]).collect();
        let sm = FieldSampler::new(&spec, &pts).unwrap();
        let rho = PointMeasure::new(vec![pts[0].clone(), pts[2].clone()], vec![0.7, 0.3]).unwrap();
        let tilt = TiltSpec::new(&sm, rho.clone(), level).unwrap();
        let base = sm.sample(seed, 0);
        let (tilted, _) = tilt_sample(&sm, &tilt, seed, 0).unwrap();
        for (i, x) in pts.iter().enumerate() {
            let h: f64 = rho.points.iter().zip(&rho.weights).map(|(y, w)| w * spec.covariance(&[x[0] - y[0]])).sum();
            prop_assert!((tilted.values[i] - base.values[i] - level * h).abs() < 1e-10);
        }
        let direct: f64 = rho.points.iter().zip(&rho.weights)
            .map(|(y, w)| rho.points.iter().zip(&rho.weights).map(|(z, v)| w * v * spec.covariance(&[y[0] - z[0]])).sum::<f64>())
            .sum();
        prop_assert!((tilt.norm2 - direct).abs() < 1e-10);
    }

    #[test]
    fn pairing_is_linear(seed in 0u64..1000, a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let spec = atomize(&SpectralMeasure::iid_lattice(6), 0.1);
        let pts: Vec<Vec<f64>> = (0..6).map(|k| vec![k as f64]).collect();
        let s = sample_field(&spec, &pts, seed).unwrap();
        let rho = PointMeasure::new(vec![pts[1].clone(), pts[4].clone()], vec![a, b]).unwrap();
        let expect = a * s.values[1] + b * s.values[4];
        prop_assert!((rkhs_pairing(&s, &rho).unwrap() - expect).abs() < 1e-12);
    }
}
