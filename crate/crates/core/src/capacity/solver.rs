use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::gram::GramMatrix;
use crate::error::{LabError, Result};
use crate::spectral::CovarianceKernel;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub gap_tol_abs: f64,
    pub gap_tol_rel: f64,
    pub max_iter: usize,
    /// Tolerance for `min_D h >= 1`, before scaling with the grid.
    pub pot_tol: f64,
    /// Iterations between exact recomputations of the maintained potential.
    pub refresh: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { gap_tol_abs: 1e-8, gap_tol_rel: 1e-6, max_iter: 100_000, pot_tol: 1e-3, refresh: 500 }
    }
}

impl SolverConfig {
    pub fn gap_tol(&self, energy: f64) -> f64 {
        self.gap_tol_abs.max(self.gap_tol_rel * energy)
    }
}

/// Minimizing probability measure of the discrete energy and its certificates.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EquilibriumSolution {
    pub points: Vec<Vec<f64>>,
    pub nu: Vec<f64>,
    pub energy: f64,
    /// `1 / energy`, infinite for a degenerate kernel.
    pub capacity: f64,
    /// Conditional-gradient gap `2 (E - min_D K*nu)`.
    pub gap: f64,
    pub iterations: usize,
    /// `h = capacity * K*nu` at the domain points.
    pub potential: Vec<f64>,
    pub min_potential: f64,
    pub spacing: f64,
    pub infinite: bool,
    /// Self-energy used for zero separations (cell average for singular kernels).
    pub zero_value: f64,
}

impl EquilibriumSolution {
    /// `h(x) = capacity * sum_j nu_j K(x - x_j)`; a point of the domain uses the regularized diagonal.
    pub fn potential_at(&self, kernel: &dyn CovarianceKernel, x: &[f64]) -> f64 {
        let mut s = 0.0;
        for (p, &w) in self.points.iter().zip(&self.nu) {
            if w == 0.0 {
                continue;
            }
            let diff: Vec<f64> = x.iter().zip(p).map(|(a, b)| a - b).collect();
            let k = if diff.iter().all(|&v| v.abs() < 1e-12 * self.spacing) { self.zero_value } else { kernel.eval(&diff) };
            s += w * k;
        }
        self.capacity * s
    }

    /// Relative duality bound `1/m^2 - 1`, where `m = min_D h`: the true discrete
    /// capacity lies in `[capacity, capacity / m^2]`.
    pub fn relative_gap_bound(&self) -> f64 {
        if self.min_potential <= 0.0 {
            return f64::INFINITY;
        }
        1.0 / (self.min_potential * self.min_potential) - 1.0
    }

    /// Point, mass and potential rows.
    pub fn to_csv(&self) -> String {
        let d = self.points.first().map_or(0, |p| p.len());
        let mut out: String = (0..d).map(|k| format!("x{k},")).collect();
        out.push_str("nu,h\n");
        for ((p, w), h) in self.points.iter().zip(&self.nu).zip(&self.potential) {
            for v in p {
                out.push_str(&format!("{v},"));
            }
            out.push_str(&format!("{w},{h}\n"));
        }
        out
    }

    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "capacity": self.capacity,
            "energy": self.energy,
            "gap": self.gap,
            "iterations": self.iterations,
            "min_potential": self.min_potential,
            "infinite": self.infinite,
            "points": self.points.len(),
            "support": self.nu.iter().filter(|&&w| w > 0.0).count(),
        })
    }
}

struct Columns<'g, 'a> {
    gram: &'g GramMatrix<'a>,
    cache: HashMap<usize, Vec<f64>>,
}

impl Columns<'_, '_> {
    fn get(&mut self, j: usize) -> &[f64] {
        let gram = self.gram;
        self.cache.entry(j).or_insert_with(|| gram.column(j))
    }
}

/// Supports up to this size get an exact corrective step at each refresh.
const CORRECTIVE_LIMIT: usize = 256;

/// Minor cycles of Wolfe's min-norm-point method on the current support:
/// jump to the affine minimizer over the support, or as far toward it as
/// nonnegativity allows, dropping the coordinate that hits zero. Away steps
/// alone can stall on nearly singular Gram matrices.
fn corrective(cols: &mut Columns, support: &mut Vec<usize>, p: &mut [f64]) {
    for _ in 0..=support.len() {
        let k = support.len();
        if k < 2 {
            return;
        }
        let mut a = DMatrix::zeros(k + 1, k + 1);
        for (c, &j) in support.iter().enumerate() {
            let col = cols.get(j);
            for (r, &i) in support.iter().enumerate() {
                a[(r, c)] = col[i];
            }
            a[(k, c)] = 1.0;
            a[(c, k)] = -1.0;
        }
        let scale = a.amax();
        let mut b = DVector::zeros(k + 1);
        b[k] = 1.0;
        let Ok(x) = a.svd(true, true).solve(&b, 1e-13 * scale) else {
            return;
        };
        let q: Vec<f64> = (0..k).map(|r| x[r]).collect();
        if q.iter().any(|v| !v.is_finite()) {
            return;
        }
        if q.iter().all(|&v| v > 0.0) {
            for (r, &i) in support.iter().enumerate() {
                p[i] = q[r];
            }
            return;
        }
        let mut t = 1.0f64;
        for (r, &i) in support.iter().enumerate() {
            if q[r] <= 0.0 {
                t = t.min(p[i] / (p[i] - q[r]));
            }
        }
        for (r, &i) in support.iter().enumerate() {
            p[i] += t * (q[r] - p[i]);
            if p[i] <= 1e-15 {
                p[i] = 0.0;
            }
        }
        support.retain(|&i| p[i] > 0.0);
    }
}

fn argmin(g: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in g.iter().enumerate() {
        if v < g[best] {
            best = i;
        }
    }
    best
}

/// Away-step conditional gradient on the probability simplex with exact line search.
///
/// The linear subproblem breaks ties by lowest orbit index. Fails with
/// `NotConverged` when the gap target is not met within `max_iter`.
pub fn equilibrium_measure(gram: &GramMatrix, cfg: &SolverConfig) -> Result<EquilibriumSolution> {
    let n = gram.size();
    let diag = gram.diagonal();
    let k0 = diag.iter().cloned().fold(0.0, f64::max);
    let mut cols = Columns { gram, cache: HashMap::new() };
    let start = argmin(&diag);
    let mut p = vec![0.0; n];
    p[start] = 1.0;
    let mut support = vec![start];
    let mut g = cols.get(start).to_vec();
    let mut e = g[start];
    let mut iterations = 0;
    let mut gap;
    loop {
        let s = argmin(&g);
        gap = 2.0 * (e - g[s]);
        if e < 1e-12 * k0 {
            break;
        }
        if gap <= cfg.gap_tol(e) {
            break;
        }
        if iterations >= cfg.max_iter {
            return Err(LabError::NotConverged(format!(
                "gap {gap:.3e} above {:.3e} after {iterations} iterations",
                cfg.gap_tol(e)
            )));
        }
        iterations += 1;
        let a = *support.iter().max_by(|&&x, &&y| g[x].partial_cmp(&g[y]).unwrap().then(y.cmp(&x))).unwrap();
        let fw_gain = e - g[s];
        let away_gain = g[a] - e;
        if fw_gain >= away_gain || support.len() == 1 {
            let dg = g[s] - e;
            let col_s = cols.get(s).to_vec();
            let curv = col_s[s] - 2.0 * g[s] + e;
            let gamma = if curv > 0.0 { (-dg / curv).clamp(0.0, 1.0) } else { 1.0 };
            for i in 0..n {
                g[i] = (1.0 - gamma) * g[i] + gamma * col_s[i];
            }
            for v in p.iter_mut() {
                *v *= 1.0 - gamma;
            }
            p[s] += gamma;
            e += 2.0 * gamma * dg + gamma * gamma * curv;
            if gamma == 1.0 {
                support.clear();
            }
            if !support.contains(&s) {
                support.push(s);
            }
            support.retain(|&i| p[i] > 0.0);
        } else {
            let dg = e - g[a];
            let col_a = cols.get(a).to_vec();
            let curv = e - 2.0 * g[a] + col_a[a];
            let gamma_max = p[a] / (1.0 - p[a]);
            let gamma = if curv > 0.0 { (-dg / curv).clamp(0.0, gamma_max) } else { gamma_max };
            for i in 0..n {
                g[i] = (1.0 + gamma) * g[i] - gamma * col_a[i];
            }
            for v in p.iter_mut() {
                *v *= 1.0 + gamma;
            }
            p[a] -= gamma;
            if gamma == gamma_max {
                p[a] = 0.0;
                support.retain(|&i| i != a);
            }
            e += 2.0 * gamma * dg + gamma * gamma * curv;
        }
        if iterations % cfg.refresh == 0 {
            if support.len() <= CORRECTIVE_LIMIT {
                let before = p.clone();
                corrective(&mut cols, &mut support, &mut p);
                let energy = |v: &[f64], cols: &mut Columns| -> f64 {
                    let idx: Vec<usize> = (0..n).filter(|&i| v[i] > 0.0).collect();
                    idx.iter().map(|&j| v[j] * idx.iter().map(|&i| v[i] * cols.get(j)[i]).sum::<f64>()).sum()
                };
                // rounding in a singular solve must not undo progress
                if energy(&p, &mut cols) > energy(&before, &mut cols) {
                    p = before;
                    support = (0..n).filter(|&i| p[i] > 0.0).collect();
                }
            }
            let total: f64 = p.iter().sum();
            p.iter_mut().for_each(|v| *v /= total);
            g = vec![0.0; n];
            for &j in &support {
                let c = cols.get(j);
                for i in 0..n {
                    g[i] += p[j] * c[i];
                }
            }
            e = support.iter().map(|&j| p[j] * g[j]).sum();
        }
    }
    let infinite = e < 1e-12 * k0;
    let capacity = if infinite { f64::INFINITY } else { 1.0 / e };
    let nu = gram.expand(&p);
    let mut potential = vec![0.0; gram.domain().len()];
    for (i, &gi) in g.iter().enumerate() {
        for &m in gram.orbit(i) {
            potential[m] = if infinite { f64::INFINITY } else { gi / e };
        }
    }
    let min_potential = potential.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(EquilibriumSolution {
        points: gram.domain().points().to_vec(),
        nu,
        energy: e,
        capacity,
        gap,
        iterations,
        potential,
        min_potential,
        spacing: gram.domain().spacing,
        infinite,
        zero_value: gram.point_entry(0, 0),
    })
}
