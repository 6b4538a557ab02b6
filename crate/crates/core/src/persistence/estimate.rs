use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::fieldsim::{tilt_coefficients, FieldSampler, TiltSpec};

const BATCH: usize = 1 << 14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Naive,
    Importance,
}

/// Monte Carlo estimate of `P[min_D f >= level]`.
#[derive(Clone, Debug, Serialize)]
pub struct PersistenceEstimate {
    pub domain_points: usize,
    pub level: f64,
    pub p_hat: f64,
    /// `-log p_hat`; infinite when no sample persisted.
    pub theta_hat: f64,
    pub se_p: f64,
    /// Delta method: `se_p / p_hat`.
    pub se_theta: f64,
    pub method: Method,
    pub n_samples: usize,
    /// Samples that persisted (under the tilted law for importance sampling).
    pub hits: usize,
    /// `(sum W 1)^2 / sum (W 1)^2`; equals `hits` for the naive estimator.
    pub ess: f64,
    pub tilt_level: Option<f64>,
    pub tilt_norm2: Option<f64>,
    /// Mean and standard error of the weights over all samples; the mean estimates 1.
    pub weight_mean: f64,
    pub weight_se: f64,
    pub seed: u64,
    /// No sample persisted; `p_upper` is then a one-sided 95% bound.
    pub rare: bool,
    pub p_upper: f64,
    /// Effective sample size below 10.
    pub unreliable: bool,
}

impl PersistenceEstimate {
    pub fn csv_header() -> &'static str {
        "level,method,p_hat,theta_hat,se_p,se_theta,n,hits,ess,tilt_level,rare,unreliable"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{:?},{},{},{},{},{},{},{},{},{},{}",
            self.level,
            self.method,
            self.p_hat,
            self.theta_hat,
            self.se_p,
            self.se_theta,
            self.n_samples,
            self.hits,
            self.ess,
            self.tilt_level.map_or(String::new(), |l| l.to_string()),
            self.rare,
            self.unreliable
        )
    }
}

/// Runs `n` replications in fixed-size batches; results come back in replication order.
pub(crate) fn replicate<T: Send, F: Fn(u64) -> T + Sync>(n: usize, f: F) -> Vec<T> {
    let mut out = Vec::with_capacity(n);
    let mut start = 0usize;
    while start < n {
        let end = (start + BATCH).min(n);
        let chunk: Vec<T> = (start..end).into_par_iter().map(|r| f(r as u64)).collect();
        out.extend(chunk);
        start = end;
    }
    out
}

/// Whether the field with these coefficients stays at or above `level` on every point.
pub(crate) fn persists(sampler: &FieldSampler, coeffs: &[[f64; 2]], level: f64, buf: &mut Vec<f64>) -> bool {
    sampler.values(coeffs, buf);
    buf.iter().all(|&v| v >= level)
}

#[allow(clippy::too_many_arguments)]
fn finish(
    sampler: &FieldSampler,
    level: f64,
    seed: u64,
    method: Method,
    tilt: Option<&TiltSpec>,
    hits: usize,
    xs: &[f64],
    ws: &[f64],
) -> PersistenceEstimate {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let second = xs.iter().map(|x| x * x).sum::<f64>() / n;
    let se_p = ((second - mean * mean).max(0.0) / n).sqrt();
    let wm = ws.iter().sum::<f64>() / n;
    let w2 = ws.iter().map(|w| w * w).sum::<f64>() / n;
    let ess = if second > 0.0 { mean * mean / second * n } else { 0.0 };
    let rare = hits == 0;
    let p_upper = if rare { 1.0 - 0.05f64.powf(1.0 / n) } else { mean + 1.645 * se_p };
    PersistenceEstimate {
        domain_points: sampler.points().len(),
        level,
        p_hat: mean,
        theta_hat: -mean.ln(),
        se_p,
        se_theta: if mean > 0.0 { se_p / mean } else { f64::INFINITY },
        method,
        n_samples: xs.len(),
        hits,
        ess,
        tilt_level: tilt.map(|t| t.level),
        tilt_norm2: tilt.map(|t| t.norm2),
        weight_mean: wm,
        weight_se: ((w2 - wm * wm).max(0.0) / n).sqrt(),
        seed,
        rare,
        p_upper,
        unreliable: ess < 10.0,
    }
}

/// Fraction of `n` samples whose minimum over the sampler's points is at least `level`.
pub fn persist_naive(sampler: &FieldSampler, level: f64, n: usize, seed: u64) -> Result<PersistenceEstimate> {
    if n == 0 {
        return Err(LabError::Domain("need at least one sample".into()));
    }
    let hits_each = replicate(n, |r| {
        let mut c = Vec::new();
        let mut buf = Vec::new();
        sampler.coefficients(seed, r, &mut c);
        persists(sampler, &c, level, &mut buf)
    });
    let xs: Vec<f64> = hits_each.iter().map(|&h| if h { 1.0 } else { 0.0 }).collect();
    let hits = hits_each.iter().filter(|&&h| h).count();
    Ok(finish(sampler, level, seed, Method::Naive, None, hits, &xs, &vec![1.0; n]))
}

/// Importance-sampled estimate under the tilt `f + level_tilt * h`. With a zero
/// tilt level the draws, and therefore the estimate, coincide with
/// [`persist_naive`].
pub fn persist_importance(
    sampler: &FieldSampler,
    level: f64,
    tilt: &TiltSpec,
    n: usize,
    seed: u64,
) -> Result<PersistenceEstimate> {
    if n == 0 {
        return Err(LabError::Domain("need at least one sample".into()));
    }
    if tilt.level < 0.0 {
        return Err(LabError::Domain("tilt level must be nonnegative".into()));
    }
    if tilt.shift().len() != sampler.atom_count() {
        return Err(LabError::Support("tilt built for another spectrum".into()));
    }
    let each = replicate(n, |r| {
        let mut c = Vec::new();
        let mut buf = Vec::new();
        sampler.coefficients(seed, r, &mut c);
        let lw = tilt_coefficients(tilt, &mut c);
        (persists(sampler, &c, level, &mut buf), lw.exp())
    });
    let hits = each.iter().filter(|e| e.0).count();
    let xs: Vec<f64> = each.iter().map(|&(h, w)| if h { w } else { 0.0 }).collect();
    let ws: Vec<f64> = each.iter().map(|e| e.1).collect();
    Ok(finish(sampler, level, seed, Method::Importance, Some(tilt), hits, &xs, &ws))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capacity::PointMeasure;
    use crate::fieldsim::atomize;
    use crate::spectral::SpectralMeasure;

    #[test]
    fn constant_field_half() {
        let spec = atomize(&SpectralMeasure::delta0(1.0, 1), 0.1);
        let pts = vec![vec![0.0], vec![1.0], vec![2.0]];
        let sm = FieldSampler::new(&spec, &pts).unwrap();
        let e = persist_naive(&sm, 0.0, 20_000, 1).unwrap();
        assert!((e.p_hat - 0.5).abs() < 3.0 * e.se_p);
    }

    #[test]
    fn zero_tilt_matches_naive() {
        let spec = atomize(&SpectralMeasure::iid_lattice(4), 0.1);
        let pts: Vec<Vec<f64>> = (0..4).map(|k| vec![k as f64]).collect();
        let sm = FieldSampler::new(&spec, &pts).unwrap();
        let t = TiltSpec::new(&sm, PointMeasure::dirac(vec![0.0]), 0.0).unwrap();
        let a = persist_naive(&sm, 0.0, 5000, 9).unwrap();
        let b = persist_importance(&sm, 0.0, &t, 5000, 9).unwrap();
        assert_eq!(a.p_hat, b.p_hat);
        assert_eq!(a.se_p, b.se_p);
    }

    #[test]
    fn rare_flag() {
        let spec = atomize(&SpectralMeasure::iid_lattice(8), 0.1);
        let pts: Vec<Vec<f64>> = (0..8).map(|k| vec![k as f64]).collect();
        let sm = FieldSampler::new(&spec, &pts).unwrap();
        let e = persist_naive(&sm, 3.0, 100, 2).unwrap();
        assert!(e.rare && e.p_hat == 0.0 && e.p_upper > 0.0 && e.theta_hat.is_infinite());
    }
}
