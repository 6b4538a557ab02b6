use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::atomize::AtomizedSpectrum;
use crate::capacity::PointMeasure;
use crate::error::{LabError, Result};
use crate::spectral::SpectralMeasure;

/// One realization of the field on a finite set of points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldSample {
    pub points: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    /// Standard Gaussian `(zeta_j, eta_j)` per synthesis atom; `eta_j` is unused
    /// for atoms that are their own mirror.
    pub coefficients: Vec<[f64; 2]>,
    pub seed: u64,
    /// ChaCha stream: component in the top byte, replication below.
    pub stream: u64,
    /// Covariance bias bound from atomization over the largest lag on the grid.
    pub bias_bound: f64,
}

impl FieldSample {
    pub fn to_csv(&self) -> String {
        let d = self.points.first().map_or(0, |p| p.len());
        let mut out: String = (0..d).map(|k| format!("x{k},")).collect();
        out.push_str("value\n");
        for (p, v) in self.points.iter().zip(&self.values) {
            for c in p {
                out.push_str(&format!("{c},"));
            }
            out.push_str(&format!("{v}\n"));
        }
        out
    }
}

/// Stream id of replication `rep` of independent component `component`.
pub fn stream_id(component: u8, rep: u64) -> u64 {
    ((component as u64) << 56) | (rep & ((1u64 << 56) - 1))
}

/// Precomputed synthesis basis `sigma_j cos(2 pi lambda_j . x)`, `sigma_j sin(...)`
/// on fixed points. Atom `j` always consumes words `4j .. 4j+4` of its
/// replication's stream, so its coefficients depend only on `(seed, stream, j)`.
pub struct FieldSampler<'s> {
    spec: &'s AtomizedSpectrum,
    points: Vec<Vec<f64>>,
    cos: Vec<f64>,
    sin: Vec<f64>,
    component: u8,
    bias_bound: f64,
}

impl<'s> FieldSampler<'s> {
    pub fn new(spec: &'s AtomizedSpectrum, points: &[Vec<f64>]) -> Result<Self> {
        if spec.atoms.is_empty() {
            return Err(LabError::Degenerate("empty spectrum".into()));
        }
        if points.iter().any(|p| p.len() != spec.dim) {
            return Err(LabError::Domain("point dimension differs from the spectrum".into()));
        }
        let na = spec.atoms.len();
        let mut cos = vec![0.0; points.len() * na];
        let mut sin = vec![0.0; points.len() * na];
        for (i, x) in points.iter().enumerate() {
            for (j, a) in spec.atoms.iter().enumerate() {
                let phase = 2.0 * PI * a.freq.iter().zip(x).map(|(l, v)| l * v).sum::<f64>();
                let sigma = if a.mirrored { (2.0 * a.weight).sqrt() } else { a.weight.sqrt() };
                cos[i * na + j] = sigma * phase.cos();
                sin[i * na + j] = if a.mirrored { sigma * phase.sin() } else { 0.0 };
            }
        }
        let mut lag: f64 = 0.0;
        for p in points {
            for q in points {
                lag = lag.max(p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt());
            }
        }
        Ok(Self { spec, points: points.to_vec(), cos, sin, component: 0, bias_bound: spec.covariance_bias_bound(lag) })
    }

    /// Uses the stream namespace `component`, for independent copies.
    pub fn with_component(mut self, component: u8) -> Self {
        self.component = component;
        self
    }

    pub fn spectrum(&self) -> &AtomizedSpectrum {
        self.spec
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn atom_count(&self) -> usize {
        self.spec.atoms.len()
    }

    /// Box-Muller coefficients for replication `rep`.
    pub fn coefficients(&self, seed: u64, rep: u64, out: &mut Vec<[f64; 2]>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id(self.component, rep));
        out.clear();
        for _ in 0..self.spec.atoms.len() {
            let u1: f64 = 1.0 - rng.gen::<f64>();
            let u2: f64 = rng.gen::<f64>();
            let r = (-2.0 * u1.ln()).sqrt();
            let (s, c) = (2.0 * PI * u2).sin_cos();
            out.push([r * c, r * s]);
        }
    }

    /// Field values for the given coefficients.
    pub fn values(&self, coeffs: &[[f64; 2]], out: &mut Vec<f64>) {
        let na = coeffs.len();
        out.clear();
        for i in 0..self.points.len() {
            let (c, s) = (&self.cos[i * na..(i + 1) * na], &self.sin[i * na..(i + 1) * na]);
            let mut v = 0.0;
            for j in 0..na {
                v += coeffs[j][0] * c[j] + coeffs[j][1] * s[j];
            }
            out.push(v);
        }
    }

    pub fn sample(&self, seed: u64, rep: u64) -> FieldSample {
        let mut coeffs = Vec::new();
        let mut values = Vec::new();
        self.coefficients(seed, rep, &mut coeffs);
        self.values(&coeffs, &mut values);
        FieldSample {
            points: self.points.clone(),
            values,
            coefficients: coeffs,
            seed,
            stream: stream_id(self.component, rep),
            bias_bound: self.bias_bound,
        }
    }

    /// Coefficient-space image `(a_j, b_j)` of `h = K * rho`, with `rho` on arbitrary points.
    pub fn representer(&self, rho: &PointMeasure) -> Vec<[f64; 2]> {
        self.spec
            .atoms
            .iter()
            .map(|a| {
                let sigma = if a.mirrored { (2.0 * a.weight).sqrt() } else { a.weight.sqrt() };
                let (mut c, mut s) = (0.0, 0.0);
                for (y, &w) in rho.points.iter().zip(&rho.weights) {
                    let phase = 2.0 * PI * a.freq.iter().zip(y).map(|(l, v)| l * v).sum::<f64>();
                    c += w * phase.cos();
                    s += w * phase.sin();
                }
                if a.mirrored {
                    [sigma * c, sigma * s]
                } else {
                    [sigma * c, 0.0]
                }
            })
            .collect()
    }
}

/// One replication of the field for `spec` on `points`.
pub fn sample_field(spec: &AtomizedSpectrum, points: &[Vec<f64>], seed: u64) -> Result<FieldSample> {
    Ok(FieldSampler::new(spec, points)?.sample(seed, 0))
}

/// Independent fields for `mu1` and `mu2`, atomized at `resolution`. The first
/// equals `sample_field` of `mu1` with the same seed; the second uses a
/// separate stream namespace. An empty measure yields the zero field.
pub fn decompose_sample(
    mu1: &SpectralMeasure,
    mu2: &SpectralMeasure,
    resolution: f64,
    points: &[Vec<f64>],
    seed: u64,
) -> Result<(FieldSample, FieldSample)> {
    if mu1.dim() != mu2.dim() || mu1.is_lattice() != mu2.is_lattice() {
        return Err(LabError::Construction("measures live on different spaces".into()));
    }
    let part = |mu: &SpectralMeasure, component: u8| -> Result<FieldSample> {
        if mu.is_empty() {
            return Ok(FieldSample {
                points: points.to_vec(),
                values: vec![0.0; points.len()],
                coefficients: Vec::new(),
                seed,
                stream: stream_id(component, 0),
                bias_bound: 0.0,
            });
        }
        let spec = AtomizedSpectrum::new(mu, resolution);
        Ok(FieldSampler::new(&spec, points)?.with_component(component).sample(seed, 0))
    };
    Ok((part(mu1, 0)?, part(mu2, 1)?))
}

/// `<f, K * rho>_H = sum_i rho_i f(x_i)`; every point of `rho` must be a sample point.
pub fn rkhs_pairing(sample: &FieldSample, rho: &PointMeasure) -> Result<f64> {
    let mut s = 0.0;
    for (y, &w) in rho.points.iter().zip(&rho.weights) {
        let i = sample
            .points
            .iter()
            .position(|p| p.iter().zip(y).all(|(a, b)| (a - b).abs() <= 1e-12 * (1.0 + a.abs())))
            .ok_or_else(|| LabError::Support(format!("point {y:?} is not on the evaluation grid")))?;
        s += w * sample.values[i];
    }
    Ok(s)
}
