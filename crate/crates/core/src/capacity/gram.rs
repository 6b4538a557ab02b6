use std::collections::HashMap;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::Serialize;

use super::domain::DiscreteDomain;
use crate::error::{LabError, Result};
use crate::spectral::CovarianceKernel;

/// Largest reduced size for which the eigenvalue check runs.
pub const EIGEN_CHECK_LIMIT: usize = 600;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Regularization {
    None,
    /// Zero-distance entries replaced by the mean kernel over a cell of side `cell`.
    CellAveragedDiagonal { cell: f64, self_energy: f64 },
}

/// Gram matrix of a kernel on a domain, reduced over hyperoctahedral orbits
/// when both are symmetric.
///
/// The reduced entry `M[I][J]` is the mean of `K(x_I - x_j)` over the points
/// `x_j` of orbit `J`, so a measure spreading mass `p_J` evenly over each orbit
/// has energy `p^T M p`. Without symmetry every orbit is a single point.
pub struct GramMatrix<'a> {
    kernel: &'a dyn CovarianceKernel,
    domain: &'a DiscreteDomain,
    orbits: Vec<Vec<usize>>,
    table: Option<Vec<f64>>,
    zero_value: f64,
    pub regularization: Regularization,
}

impl<'a> GramMatrix<'a> {
    /// Assembles the (lazy) Gram matrix; `reduce` allows orbit reduction.
    pub fn assemble(kernel: &'a dyn CovarianceKernel, domain: &'a DiscreteDomain, reduce: bool) -> Result<Self> {
        if kernel.dim() != domain.dim {
            return Err(LabError::Domain(format!(
                "kernel dimension {} differs from domain dimension {}",
                kernel.dim(),
                domain.dim
            )));
        }
        let symmetric = reduce && kernel.is_hyperoctahedral() && domain.is_hyperoctahedral();
        let orbits = match (symmetric, domain.coords()) {
            (true, Some(coords)) => orbit_partition(coords),
            _ => (0..domain.len()).map(|i| vec![i]).collect(),
        };
        let (zero_value, regularization) = if kernel.is_singular() && !domain.lattice {
            let e = kernel.cell_self_energy(domain.spacing);
            (e, Regularization::CellAveragedDiagonal { cell: domain.spacing, self_energy: e })
        } else {
            (kernel.eval(&vec![0.0; domain.dim]), Regularization::None)
        };
        if !zero_value.is_finite() {
            return Err(LabError::Extent("kernel undefined at the origin".into()));
        }
        let table = match domain.coords() {
            Some(coords) if kernel.is_radial() => {
                let d = domain.dim;
                let reach = coords.iter().map(|k| k.iter().map(|v| v.abs()).max().unwrap_or(0)).max().unwrap_or(0);
                let size = if d == 1 { 2 * reach as usize + 1 } else { 4 * (reach * reach) as usize * d + 1 };
                let h = domain.spacing;
                let values: Vec<f64> = (0..size)
                    .into_par_iter()
                    .map(|m| {
                        if m == 0 {
                            return zero_value;
                        }
                        let r = if d == 1 { m as f64 * h } else { (m as f64).sqrt() * h };
                        let mut x = vec![0.0; d];
                        x[0] = r;
                        kernel.eval(&x)
                    })
                    .collect();
                if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
                    return Err(LabError::Extent(format!("kernel undefined at distance index {bad}")));
                }
                Some(values)
            }
            _ => None,
        };
        Ok(Self { kernel, domain, orbits, table, zero_value, regularization })
    }

    /// Reduced size (number of orbits).
    pub fn size(&self) -> usize {
        self.orbits.len()
    }

    pub fn is_reduced(&self) -> bool {
        self.orbits.len() < self.domain.len()
    }

    pub fn orbit(&self, i: usize) -> &[usize] {
        &self.orbits[i]
    }

    pub fn domain(&self) -> &DiscreteDomain {
        self.domain
    }

    pub fn kernel(&self) -> &dyn CovarianceKernel {
        self.kernel
    }

    /// Kernel between two domain points, with the regularized diagonal.
    pub fn point_entry(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return self.zero_value;
        }
        if let (Some(t), Some(c)) = (&self.table, self.domain.coords()) {
            let (a, b) = (&c[i], &c[j]);
            let idx = if a.len() == 1 {
                (a[0] - b[0]).unsigned_abs() as usize
            } else {
                a.iter().zip(b).map(|(x, y)| ((x - y) * (x - y)) as usize).sum()
            };
            return t[idx];
        }
        let p = self.domain.points();
        let diff: Vec<f64> = p[i].iter().zip(&p[j]).map(|(a, b)| a - b).collect();
        self.kernel.eval(&diff)
    }

    /// `M[I][J]`.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let rep = self.orbits[i][0];
        let members = &self.orbits[j];
        members.iter().map(|&m| self.point_entry(rep, m)).sum::<f64>() / members.len() as f64
    }

    /// Column `M[.][J]`.
    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.size()).into_par_iter().map(|i| self.entry(i, j)).collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.size()).into_par_iter().map(|i| self.entry(i, i)).collect()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.size();
        let cols: Vec<Vec<f64>> = (0..n).into_par_iter().map(|j| self.column(j)).collect();
        DMatrix::from_fn(n, n, |i, j| 0.5 * (cols[j][i] + cols[i][j]))
    }

    /// Smallest eigenvalue of the reduced matrix, or `None` above the size limit.
    pub fn min_eigenvalue(&self) -> Option<f64> {
        (self.size() <= EIGEN_CHECK_LIMIT)
            .then(|| SymmetricEigen::new(self.to_dense()).eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min))
    }

    /// Errors when the smallest eigenvalue is below `-tol * max|M|`.
    pub fn check_psd(&self, tol: f64) -> Result<()> {
        if let Some(lmin) = self.min_eigenvalue() {
            let scale = self.diagonal().iter().cloned().fold(0.0, f64::max);
            if lmin < -tol * scale {
                return Err(LabError::Degenerate(format!("Gram matrix not positive semidefinite: eigenvalue {lmin:.3e}")));
            }
        }
        Ok(())
    }

    /// Per-point measure from orbit masses.
    pub fn expand(&self, orbit_mass: &[f64]) -> Vec<f64> {
        let mut nu = vec![0.0; self.domain.len()];
        for (o, &p) in self.orbits.iter().zip(orbit_mass) {
            for &i in o {
                nu[i] = p / o.len() as f64;
            }
        }
        nu
    }
}

/// Groups integer points by sorted absolute coordinates; each orbit lists its
/// members in increasing index order and orbits are ordered by first member.
fn orbit_partition(coords: &[Vec<i64>]) -> Vec<Vec<usize>> {
    let mut index: HashMap<Vec<i64>, usize> = HashMap::new();
    let mut orbits: Vec<Vec<usize>> = Vec::new();
    for (i, k) in coords.iter().enumerate() {
        let mut key: Vec<i64> = k.iter().map(|v| v.abs()).collect();
        key.sort_unstable();
        let slot = *index.entry(key).or_insert_with(|| {
            orbits.push(Vec::new());
            orbits.len() - 1
        });
        orbits[slot].push(i);
    }
    orbits
}
