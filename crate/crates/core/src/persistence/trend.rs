use serde::{Deserialize, Serialize};

use super::estimate::{persist_importance, persist_naive, persists, replicate, Method};
use crate::capacity::{equilibrium_measure, GramMatrix, Resolution, SolverConfig};
use crate::error::{LabError, Result};
use crate::fieldsim::{AtomizedSpectrum, FieldSampler, TiltSpec};

/// Declared singularity order `alpha` and absolutely continuous mass `m`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingularityHypothesis {
    pub alpha: f64,
    pub m: f64,
}

impl SingularityHypothesis {
    fn check(&self, d: usize) -> Result<()> {
        if !(0.0..d as f64).contains(&self.alpha) {
            return Err(LabError::Hypothesis(format!(
                "singularity order {} outside [0, {d}): no persistence asymptotics apply",
                self.alpha
            )));
        }
        if !(self.m >= 0.0) {
            return Err(LabError::Domain("m must be nonnegative".into()));
        }
        Ok(())
    }

    /// `l_T = sqrt(2 m (d - alpha) log T)`.
    pub fn ell(&self, d: usize, t: f64) -> f64 {
        (2.0 * self.m * (d as f64 - self.alpha) * t.ln()).max(0.0).sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Estimator {
    Naive,
    /// Tilt along the equilibrium potential; `level = None` uses `l_T`.
    Importance { level: Option<f64> },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrendConfig {
    pub resolution: Resolution,
    /// Persistence level.
    pub level: f64,
    pub n_samples: usize,
    pub seed: u64,
    pub estimator: Estimator,
    pub solver: SolverConfig,
}

#[derive(Clone, Debug, Serialize)]
pub struct TrendRow {
    pub t: f64,
    pub points: usize,
    pub capacity: f64,
    pub theta_hat: f64,
    pub theta_se: f64,
    /// `m (d - alpha) Cap(B(T)) log T`.
    pub predictor: f64,
    pub ratio: f64,
    pub ratio_se: f64,
    pub method: Method,
    pub ess: f64,
    pub tilt_level: Option<f64>,
    pub flags: Vec<String>,
}

/// `theta_hat(T) / (m (d - alpha) Cap(B(T)) log T)` over `t_list`. Capacities
/// use the covariance of the sampled spectrum; every radius shares one seed,
/// so the fields are nested restrictions of the same realizations. The table
/// stops at the first radius where no sample persists.
pub fn theta_trend(
    spec: &AtomizedSpectrum,
    hyp: &SingularityHypothesis,
    t_list: &[f64],
    cfg: &TrendConfig,
) -> Result<Vec<TrendRow>> {
    let d = spec.dim;
    hyp.check(d)?;
    let kernel = spec.to_measure();
    let mut rows = Vec::new();
    for &t in t_list {
        if !(t > 1.0) {
            return Err(LabError::Domain("radii must exceed 1".into()));
        }
        let dom = cfg.resolution.domain(d, t)?;
        let gram = GramMatrix::assemble(&kernel, &dom, true)?;
        let sol = equilibrium_measure(&gram, &cfg.solver)?;
        let sampler = FieldSampler::new(spec, dom.points())?;
        let est = match cfg.estimator {
            Estimator::Naive => persist_naive(&sampler, cfg.level, cfg.n_samples, cfg.seed)?,
            Estimator::Importance { level } => {
                let l = level.unwrap_or_else(|| hyp.ell(d, t));
                let tilt = TiltSpec::from_equilibrium(&sampler, &sol, l)?;
                persist_importance(&sampler, cfg.level, &tilt, cfg.n_samples, cfg.seed)?
            }
        };
        let predictor = hyp.m * (d as f64 - hyp.alpha) * sol.capacity * t.ln();
        let mut flags = Vec::new();
        if predictor == 0.0 {
            flags.push("degenerate: m = 0, predictor vanishes".to_string());
        }
        if est.unreliable {
            flags.push("unreliable: effective sample size below 10".to_string());
        }
        if est.rare {
            flags.push(format!("rare: no persisting sample, p <= {:.3e}", est.p_upper));
        }
        let ratio = est.theta_hat / predictor;
        rows.push(TrendRow {
            t,
            points: dom.len(),
            capacity: sol.capacity,
            theta_hat: est.theta_hat,
            theta_se: est.se_theta,
            predictor,
            ratio,
            ratio_se: est.se_theta / predictor,
            method: est.method,
            ess: est.ess,
            tilt_level: est.tilt_level,
            flags,
        });
        if est.rare {
            break;
        }
    }
    Ok(rows)
}

/// Macroscopic test measure `eta`: a Lipschitz radial probability density on `B(1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestMeasure {
    /// Density proportional to `1 - |x|`.
    Tent,
    /// Density proportional to `1 - |x|^2`.
    Parabolic,
}

impl TestMeasure {
    fn profile(&self, r: f64) -> f64 {
        match self {
            TestMeasure::Tent => (1.0 - r).max(0.0),
            TestMeasure::Parabolic => (1.0 - r * r).max(0.0),
        }
    }

    pub fn is_radial(&self) -> bool {
        true
    }

    /// Weights of `eta_T = T^{-d} eta(./T)` on `points`, renormalized so the
    /// discrete total equals the unit mass of `eta`.
    pub fn weights(&self, points: &[Vec<f64>], t: f64) -> Result<Vec<f64>> {
        let w: Vec<f64> = points.iter().map(|p| self.profile(p.iter().map(|v| v * v).sum::<f64>().sqrt() / t)).collect();
        let total: f64 = w.iter().sum();
        if !(total > 0.0) {
            return Err(LabError::Support("test measure has no mass on the grid".into()));
        }
        Ok(w.into_iter().map(|v| v / total).collect())
    }
}

/// Rejection-sampled average of `<f, eta>` given persistence above `level`.
#[derive(Clone, Debug, Serialize)]
pub struct ConditionedStat {
    pub accepted: usize,
    pub draws: usize,
    pub acceptance: f64,
    pub mean: f64,
    pub sd: f64,
    pub se: f64,
    /// Smallest field value seen in any accepted sample.
    pub min_value: f64,
}

/// Draws until `n_conditioned` samples persist or `max_draws` is reached;
/// accepted samples are taken in replication order, so the result does not
/// depend on the thread count.
pub fn conditioned_average(
    sampler: &FieldSampler,
    weights: &[f64],
    level: f64,
    n_conditioned: usize,
    max_draws: usize,
    seed: u64,
) -> Result<ConditionedStat> {
    if weights.len() != sampler.points().len() {
        return Err(LabError::Support("one weight per grid point is required".into()));
    }
    if n_conditioned == 0 {
        return Err(LabError::Domain("need at least one conditioned sample".into()));
    }
    let batch = (4 * n_conditioned).max(4096);
    let mut found: Vec<(f64, f64)> = Vec::new();
    let mut draws = 0usize;
    while found.len() < n_conditioned && draws < max_draws {
        let n = batch.min(max_draws - draws);
        let base = draws as u64;
        let got = replicate(n, |r| {
            let mut c = Vec::new();
            let mut buf = Vec::new();
            sampler.coefficients(seed, base + r, &mut c);
            if persists(sampler, &c, level, &mut buf) {
                let pairing: f64 = buf.iter().zip(weights).map(|(v, w)| v * w).sum();
                let lo = buf.iter().cloned().fold(f64::INFINITY, f64::min);
                Some((pairing, lo))
            } else {
                None
            }
        });
        let mut used = n;
        for (i, v) in got.into_iter().enumerate().filter_map(|(i, g)| g.map(|v| (i, v))) {
            found.push(v);
            if found.len() == n_conditioned {
                used = i + 1;
                break;
            }
        }
        draws += used;
    }
    let k = found.len();
    let mean = if k > 0 { found.iter().map(|v| v.0).sum::<f64>() / k as f64 } else { f64::NAN };
    let sd = if k > 1 { (found.iter().map(|v| (v.0 - mean).powi(2)).sum::<f64>() / (k - 1) as f64).sqrt() } else { f64::NAN };
    Ok(ConditionedStat {
        accepted: k,
        draws,
        acceptance: k as f64 / draws.max(1) as f64,
        mean,
        sd,
        se: sd / (k as f64).sqrt(),
        min_value: found.iter().map(|v| v.1).fold(f64::INFINITY, f64::min),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepulsionConfig {
    pub resolution: Resolution,
    pub level: f64,
    pub n_conditioned: usize,
    /// Radii whose acceptance falls below this are skipped.
    pub min_accept_rate: f64,
    pub seed: u64,
    pub solver: SolverConfig,
}

impl Default for RepulsionConfig {
    fn default() -> Self {
        Self {
            resolution: Resolution::Lattice,
            level: 0.0,
            n_conditioned: 200,
            min_accept_rate: 1e-4,
            seed: 0,
            solver: SolverConfig::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RepulsionRow {
    pub t: f64,
    pub ell_t: f64,
    pub accepted: usize,
    pub draws: usize,
    pub acceptance: f64,
    /// Mean of `<f~_T, eta_T>` over conditioned samples.
    pub mean_pairing: f64,
    pub se_pairing: f64,
    /// `<h_T, eta_T>`.
    pub reference: f64,
    /// `|mean_pairing / l_T - reference|`.
    pub gap: f64,
    pub gap_se: f64,
    pub skipped: bool,
}

/// Normalized repulsion gap per radius. Fails when `m = 0`, since `l_T` vanishes.
pub fn repulsion_experiment(
    spec: &AtomizedSpectrum,
    hyp: &SingularityHypothesis,
    t_list: &[f64],
    eta: TestMeasure,
    cfg: &RepulsionConfig,
) -> Result<Vec<RepulsionRow>> {
    let d = spec.dim;
    hyp.check(d)?;
    if hyp.m == 0.0 {
        return Err(LabError::Degenerate("m = 0: the repulsion normalizer vanishes".into()));
    }
    if !(cfg.min_accept_rate > 0.0) {
        return Err(LabError::Domain("minimum acceptance rate must be positive".into()));
    }
    let kernel = spec.to_measure();
    let max_draws = (cfg.n_conditioned as f64 / cfg.min_accept_rate).ceil() as usize;
    let mut rows = Vec::new();
    for &t in t_list {
        if !(t > 1.0) {
            return Err(LabError::Domain("radii must exceed 1".into()));
        }
        let dom = cfg.resolution.domain(d, t)?;
        let gram = GramMatrix::assemble(&kernel, &dom, true)?;
        let sol = equilibrium_measure(&gram, &cfg.solver)?;
        let w = eta.weights(dom.points(), t)?;
        let reference: f64 = w.iter().zip(&sol.potential).map(|(a, h)| a * h).sum();
        let sampler = FieldSampler::new(spec, dom.points())?;
        let stat = conditioned_average(&sampler, &w, cfg.level, cfg.n_conditioned, max_draws, cfg.seed)?;
        let ell = hyp.ell(d, t);
        let skipped = stat.accepted < cfg.n_conditioned;
        rows.push(RepulsionRow {
            t,
            ell_t: ell,
            accepted: stat.accepted,
            draws: stat.draws,
            acceptance: stat.acceptance,
            mean_pairing: stat.mean,
            se_pairing: stat.se,
            reference,
            gap: (stat.mean / ell - reference).abs(),
            gap_se: stat.se / ell,
            skipped,
        });
    }
    Ok(rows)
}
