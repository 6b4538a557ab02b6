use serde::Serialize;

use super::domain::DiscreteDomain;
use super::gram::GramMatrix;
use super::profiles::{capacity_ball, Resolution};
use super::solver::{equilibrium_measure, EquilibriumSolution, SolverConfig};
use crate::error::{LabError, Result};
use crate::spectral::{CovarianceKernel, SpectralMeasure, TruncationPair};

/// Radius factor in the upper capacity bound `4 / mu[B(c/T)]`: for `|lambda| <= c/T`
/// and `|x| <= T`, `cos(2 pi lambda x) >= cos(pi/3) = 1/2`.
pub const BRACKET_CONSTANT: f64 = 1.0 / 6.0;

#[derive(Clone, Debug, Serialize)]
pub struct ValidatorRow {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs`, nonnegative when the inequality `lhs <= rhs` holds.
    pub slack: f64,
    pub allowance: f64,
    pub holds: bool,
}

impl ValidatorRow {
    fn new(name: &str, lhs: f64, rhs: f64, allowance: f64) -> Self {
        let slack = rhs - lhs;
        Self { name: name.into(), lhs, rhs, slack, allowance, holds: slack >= -allowance }
    }

    pub fn into_result(self) -> Result<Self> {
        if self.holds {
            Ok(self)
        } else {
            Err(LabError::Validator {
                name: self.name.clone(),
                detail: format!("{} > {} beyond allowance {:.3e}", self.lhs, self.rhs, self.allowance),
            })
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DualReport {
    pub capacity: f64,
    /// `Cap^2 E[nu]` with the energy recomputed pairwise from the expanded measure.
    pub rkhs_norm2: f64,
    /// `|rkhs_norm2 - Cap| / Cap`.
    pub norm_residual: f64,
    pub min_potential: f64,
    /// `1 / min_D h^2 - 1`: relative width of the capacity bracket.
    pub gap_bound: f64,
    pub pot_tol: f64,
    pub holds: bool,
}

/// Both sides of the duality: `||h||^2 = Cap` and `min_D h >= 1 - pot_tol`.
pub fn dual_check(sol: &EquilibriumSolution, gram: &GramMatrix, pot_tol: f64) -> Result<DualReport> {
    let support: Vec<usize> = (0..sol.nu.len()).filter(|&i| sol.nu[i] > 0.0).collect();
    let mut e = 0.0;
    for &i in &support {
        let mut row = 0.0;
        for &j in &support {
            row += sol.nu[j] * gram.point_entry(i, j);
        }
        e += sol.nu[i] * row;
    }
    let rkhs_norm2 = sol.capacity * sol.capacity * e;
    let norm_residual = (rkhs_norm2 - sol.capacity).abs() / sol.capacity;
    let gap_bound = sol.relative_gap_bound();
    let holds = norm_residual <= gap_bound + 1e-9 && sol.min_potential >= 1.0 - pot_tol;
    let report = DualReport { capacity: sol.capacity, rkhs_norm2, norm_residual, min_potential: sol.min_potential, gap_bound, pot_tol, holds };
    if !holds {
        return Err(LabError::Validator { name: "duality".into(), detail: format!("{report:?}") });
    }
    Ok(report)
}

#[derive(Clone, Debug, Serialize)]
pub struct BracketReport {
    pub t: f64,
    /// `1 / int phi_T^2 d mu`.
    pub lower: f64,
    pub capacity: f64,
    /// `4 / mu[B(c/T)]`.
    pub upper: f64,
    pub holds: bool,
}

/// `(int phi_T^2 d mu)^{-1} <= Cap(B(T)) <= 4 / mu[B(c/T)]`, with `allowance` relative slack.
pub fn bracket_check(mu: &SpectralMeasure, pair: &TruncationPair, t: f64, capacity: f64, allowance: f64) -> BracketReport {
    let smoothed = mu.reweighted(|l| {
        let r = l.iter().map(|v| v * v).sum::<f64>().sqrt();
        let p = pair.phi(t, r);
        p * p
    });
    let lower = 1.0 / smoothed.total_mass();
    let upper = 4.0 / mu.ball_mass(BRACKET_CONSTANT / t);
    let holds = lower <= capacity * (1.0 + allowance) && capacity <= upper * (1.0 + allowance);
    BracketReport { t, lower, capacity, upper, holds }
}

/// `Cap(D1 u D2) <= Cap(D1) + Cap(D2)`, for nonnegative kernels.
pub fn subadditivity_check(
    kernel: &dyn CovarianceKernel,
    d1: &DiscreteDomain,
    d2: &DiscreteDomain,
    cfg: &SolverConfig,
) -> Result<ValidatorRow> {
    let union = d1.union(d2)?;
    let solve = |d: &DiscreteDomain| -> Result<EquilibriumSolution> {
        let g = GramMatrix::assemble(kernel, d, true)?;
        if (0..d.len()).any(|i| (0..d.len()).any(|j| g.point_entry(i, j) < 0.0)) {
            return Err(LabError::Hypothesis("subadditivity needs a nonnegative kernel".into()));
        }
        equilibrium_measure(&g, cfg)
    };
    let (a, b, u) = (solve(d1)?, solve(d2)?, solve(&union)?);
    // the part capacities are lower bounds; their certified gaps widen the right side
    let allowance = a.capacity * a.relative_gap_bound() + b.capacity * b.relative_gap_bound() + 1e-12 * (a.capacity + b.capacity);
    Ok(ValidatorRow::new("subadditivity", u.capacity, a.capacity + b.capacity, allowance))
}

/// Averaging an unreduced solution over coordinate permutations and sign flips
/// cannot raise its energy.
pub fn radialization_check(kernel: &dyn CovarianceKernel, domain: &DiscreteDomain, cfg: &SolverConfig) -> Result<ValidatorRow> {
    let full = GramMatrix::assemble(kernel, domain, false)?;
    let reduced = GramMatrix::assemble(kernel, domain, true)?;
    if !reduced.is_reduced() {
        return Err(LabError::Hypothesis("kernel or domain lacks the symmetry".into()));
    }
    let sol = equilibrium_measure(&full, cfg)?;
    let orbit_mass: Vec<f64> = (0..reduced.size()).map(|o| reduced.orbit(o).iter().map(|&i| sol.nu[i]).sum()).collect();
    let nu = reduced.expand(&orbit_mass);
    let support: Vec<usize> = (0..nu.len()).filter(|&i| nu[i] > 0.0).collect();
    let mut e = 0.0;
    for &i in &support {
        for &j in &support {
            e += nu[i] * nu[j] * full.point_entry(i, j);
        }
    }
    Ok(ValidatorRow::new("radialization", e, sol.energy + sol.gap, 1e-12 * sol.energy.abs()))
}

/// `Cap_mu(B(T)) >= Cap_{phi_s^2 mu}(B(T - s))`.
#[allow(clippy::too_many_arguments)]
pub fn smoothing_check(
    mu: &SpectralMeasure,
    kernel: &dyn CovarianceKernel,
    pair: &TruncationPair,
    t: f64,
    s: f64,
    res: Resolution,
    cfg: &SolverConfig,
) -> Result<ValidatorRow> {
    if !(s > 0.0 && s < t) {
        return Err(LabError::Domain("smoothing needs 0 < s < T".into()));
    }
    let smoothed = mu.reweighted(|l| {
        let r = l.iter().map(|v| v * v).sum::<f64>().sqrt();
        let p = pair.phi(s, r);
        p * p
    });
    let big = capacity_ball(kernel, t, res, cfg)?;
    let small = capacity_ball(&smoothed, t - s, res, cfg)?;
    let allowance = small.capacity * small.relative_gap_bound() + big.capacity * big.relative_gap_bound() + 1e-12;
    Ok(ValidatorRow::new("smoothing", small.capacity, big.capacity, allowance))
}

/// For feasible `nu` with `E[nu] Cap <= 2`:
/// `|<h_D, eta> - <h_nu, eta>| <= 2 sqrt(E[eta] Cap (E[nu] Cap - 1))`.
pub fn stability_check(sol: &EquilibriumSolution, gram: &GramMatrix, nu: &[f64], eta: &[f64]) -> Result<ValidatorRow> {
    let n = nu.len();
    if n != gram.domain().len() || eta.len() != n {
        return Err(LabError::Support("measures must live on the domain points".into()));
    }
    let form = |a: &[f64], b: &[f64]| -> f64 {
        let mut e = 0.0;
        for i in (0..n).filter(|&i| a[i] != 0.0) {
            for j in (0..n).filter(|&j| b[j] != 0.0) {
                e += a[i] * b[j] * gram.point_entry(i, j);
            }
        }
        e
    };
    let cap = sol.capacity;
    let e_nu = form(nu, nu);
    if e_nu * cap > 2.0 {
        return Err(LabError::Hypothesis(format!("E[nu] Cap = {} exceeds 2", e_nu * cap)));
    }
    let e_eta = form(eta, eta);
    let h_d: f64 = eta.iter().zip(&sol.potential).map(|(a, h)| a * h).sum();
    let h_nu = form(nu, eta) / e_nu;
    let bound = 2.0 * (e_eta * cap * (e_nu * cap - 1.0).max(0.0)).sqrt();
    let allowance = 2.0 * (e_eta * cap * sol.relative_gap_bound()).sqrt() + 1e-9;
    Ok(ValidatorRow::new("stability", (h_d - h_nu).abs(), bound, allowance))
}

/// Runs every applicable structural check on balls of radius `t`.
///
/// Subadditivity uses two copies of `B(t)` four radii apart; smoothing uses
/// `s = t/4`; stability perturbs the equilibrium measure towards the uniform
/// measure. Fails on the first violated inequality.
#[allow(clippy::too_many_arguments)]
pub fn structural_validators(
    mu: &SpectralMeasure,
    kernel: &dyn CovarianceKernel,
    pair: &TruncationPair,
    t: f64,
    res: Resolution,
    cfg: &SolverConfig,
) -> Result<Vec<ValidatorRow>> {
    let d = kernel.dim();
    let dom = res.domain(d, t)?;
    let mut rows = Vec::new();
    let mut shift = vec![0.0; d];
    shift[0] = 4.0 * t;
    let far = dom.translated(&shift)?;
    match subadditivity_check(kernel, &dom, &far, cfg) {
        Ok(r) => rows.push(r.into_result()?),
        Err(LabError::Hypothesis(_)) => {}
        Err(e) => return Err(e),
    }
    if dom.len() <= 400 {
        match radialization_check(kernel, &dom, cfg) {
            Ok(r) => rows.push(r.into_result()?),
            Err(LabError::Hypothesis(_)) => {}
            Err(e) => return Err(e),
        }
    }
    rows.push(smoothing_check(mu, kernel, pair, t, t / 4.0, res, cfg)?.into_result()?);
    let gram = GramMatrix::assemble(kernel, &dom, true)?;
    let sol = equilibrium_measure(&gram, cfg)?;
    let report = bracket_check(mu, pair, t, sol.capacity, sol.relative_gap_bound() + 1e-9);
    rows.push(ValidatorRow::new("bracket_lower", report.lower, report.capacity, report.capacity * 1e-9).into_result()?);
    rows.push(ValidatorRow::new("bracket_upper", report.capacity, report.upper, report.upper * 1e-9).into_result()?);
    let n = dom.len();
    let uniform = vec![1.0 / n as f64; n];
    let nu: Vec<f64> = sol.nu.iter().zip(&uniform).map(|(a, b)| 0.9 * a + 0.1 * b).collect();
    let eta: Vec<f64> = dom.points().iter().map(|p| 1.0 + 0.5 * p[0] / t).collect();
    match stability_check(&sol, &gram, &nu, &eta) {
        Ok(r) => rows.push(r.into_result()?),
        Err(LabError::Hypothesis(_)) => {}
        Err(e) => return Err(e),
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{ClosedForm, ClosedKernel};

    #[test]
    fn far_apart_intervals_are_nearly_additive() {
        let k = ClosedKernel::new(1, ClosedForm::Gaussian { scale: 0.3 });
        let a = DiscreteDomain::interval(-1.0, 1.0, 0.25).unwrap();
        let b = a.translated(&[20.0]).unwrap();
        let row = subadditivity_check(&k, &a, &b, &SolverConfig::default()).unwrap();
        assert!(row.holds && row.slack.abs() < 1e-6 * row.rhs);
    }

    #[test]
    fn symmetrizing_does_not_raise_energy() {
        let k = ClosedKernel::new(2, ClosedForm::Exponential { scale: 1.0 });
        let dom = DiscreteDomain::ball(2, 1.0, 0.25).unwrap();
        assert!(radialization_check(&k, &dom, &SolverConfig::default()).unwrap().holds);
    }
}
