use serde::{Deserialize, Serialize};

use super::domain::DiscreteDomain;
use super::gram::GramMatrix;
use super::riesz::riesz_reference;
use super::solver::{equilibrium_measure, EquilibriumSolution, SolverConfig};
use crate::error::{LabError, Result};
use crate::spectral::{CovarianceKernel, SpectralMeasure};

/// How a ball of radius `T` is discretized.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Resolution {
    /// Grid `h Z^d` with fixed `h`.
    Absolute { spacing: f64 },
    /// Grid spacing `T / cells`, so the discretization is scale invariant.
    PerRadius { cells: usize },
    /// `Z^d` itself.
    Lattice,
}

impl Resolution {
    pub fn domain(&self, dim: usize, t: f64) -> Result<DiscreteDomain> {
        match *self {
            Resolution::Absolute { spacing } => DiscreteDomain::ball(dim, t, spacing),
            Resolution::PerRadius { cells } => DiscreteDomain::ball(dim, t, t / cells as f64),
            Resolution::Lattice => DiscreteDomain::lattice_ball(dim, t),
        }
    }
}

/// Discretize `B(T)`, assemble the reduced Gram matrix and solve.
pub fn capacity_ball(
    kernel: &dyn CovarianceKernel,
    t: f64,
    res: Resolution,
    cfg: &SolverConfig,
) -> Result<EquilibriumSolution> {
    if !(t > 0.0) {
        return Err(LabError::Domain(format!("radius {t} must be positive")));
    }
    let dom = res.domain(kernel.dim(), t)?;
    let gram = GramMatrix::assemble(kernel, &dom, true)?;
    equilibrium_measure(&gram, cfg)
}

/// Ball capacities for one kernel and resolution, checked for monotonicity in
/// the radius across calls.
pub struct CapacitySession<'k> {
    kernel: &'k dyn CovarianceKernel,
    pub resolution: Resolution,
    pub config: SolverConfig,
    history: Vec<(f64, f64, f64)>,
}

impl<'k> CapacitySession<'k> {
    pub fn new(kernel: &'k dyn CovarianceKernel, resolution: Resolution, config: SolverConfig) -> Self {
        Self { kernel, resolution, config, history: Vec::new() }
    }

    /// Solves for `B(T)`; fails with a validator error if a smaller ball of the
    /// same grid had a larger capacity beyond the solver slack.
    pub fn capacity_ball(&mut self, t: f64) -> Result<EquilibriumSolution> {
        let sol = capacity_ball(self.kernel, t, self.resolution, &self.config)?;
        let slack = sol.relative_gap_bound();
        // nested grids only: with a per-radius spacing the point sets are not nested
        if !matches!(self.resolution, Resolution::PerRadius { .. }) {
            for &(t0, c0, s0) in &self.history {
                let ordered = if t0 <= t { c0 <= sol.capacity * (1.0 + slack + s0) + 1e-12 } else { sol.capacity <= c0 * (1.0 + slack + s0) + 1e-12 };
                if !ordered {
                    return Err(LabError::Validator {
                        name: "monotonicity".into(),
                        detail: format!("Cap(B({t0})) = {c0} vs Cap(B({t})) = {}", sol.capacity),
                    });
                }
            }
        }
        self.history.push((t, sol.capacity, slack));
        Ok(sol)
    }

    pub fn history(&self) -> &[(f64, f64, f64)] {
        &self.history
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GrowthRow {
    pub t: f64,
    pub t_next: f64,
    pub capacity: f64,
    pub capacity_next: f64,
    pub ratio: f64,
}

/// `Cap(B(T + T^{1-epsilon})) / Cap(B(T))` for each `T`.
pub fn capacity_growth_profile(
    kernel: &dyn CovarianceKernel,
    t_list: &[f64],
    epsilon: f64,
    res: Resolution,
    cfg: &SolverConfig,
) -> Result<Vec<GrowthRow>> {
    if t_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(LabError::Domain("radii must increase".into()));
    }
    let pairs: Vec<(f64, f64)> = t_list.iter().map(|&t| (t, t + t.powf(1.0 - epsilon))).collect();
    capacity_ratios(kernel, &pairs, res, cfg)
}

/// `Cap(B(outer)) / Cap(B(inner))` for explicit radius pairs.
pub fn capacity_ratios(
    kernel: &dyn CovarianceKernel,
    pairs: &[(f64, f64)],
    res: Resolution,
    cfg: &SolverConfig,
) -> Result<Vec<GrowthRow>> {
    pairs
        .iter()
        .map(|&(t, t_next)| {
            let a = capacity_ball(kernel, t, res, cfg)?;
            let b = capacity_ball(kernel, t_next, res, cfg)?;
            Ok(GrowthRow { t, t_next, capacity: a.capacity, capacity_next: b.capacity, ratio: b.capacity / a.capacity })
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct ScalingRow {
    pub t: f64,
    pub capacity: f64,
    pub ball_mass: f64,
    pub c_alpha: f64,
    /// `Cap(B(T)) mu[B(1/T)] / c_alpha`.
    pub ratio: f64,
}

/// `Cap(B(T)) mu[B(1/T)] / c_{alpha,d}` over `t_list`; the caller declares `alpha`.
pub fn riesz_scaling_check(
    kernel: &dyn CovarianceKernel,
    mu: &SpectralMeasure,
    alpha: f64,
    t_list: &[f64],
    res: Resolution,
    cfg: &SolverConfig,
) -> Result<Vec<ScalingRow>> {
    let c_alpha = riesz_reference(alpha, kernel.dim())?.capacity;
    t_list
        .iter()
        .map(|&t| {
            let sol = capacity_ball(kernel, t, res, cfg)?;
            let ball_mass = if alpha == 0.0 { mu.origin_mass() } else { mu.ball_mass(1.0 / t) };
            Ok(ScalingRow { t, capacity: sol.capacity, ball_mass, c_alpha, ratio: sol.capacity * ball_mass / c_alpha })
        })
        .collect()
}
