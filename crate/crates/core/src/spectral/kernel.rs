use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt::Write as _;

use super::measure::SpectralMeasure;
use super::{check_alpha, riesz_b};
use crate::error::{LabError, Result};
use crate::numerics::cube_quadrature;

/// A stationary covariance kernel evaluated at displacements.
pub trait CovarianceKernel: Sync {
    fn dim(&self) -> usize;

    fn eval(&self, x: &[f64]) -> f64;

    /// Mean of `K(x - y)` over `x, y` independent and uniform in one cube of
    /// side `h`. Only singular kernels need to override this.
    fn cell_self_energy(&self, _h: f64) -> f64 {
        self.eval(&vec![0.0; self.dim()])
    }

    fn is_singular(&self) -> bool {
        false
    }

    /// Invariant under coordinate permutations and sign flips.
    fn is_hyperoctahedral(&self) -> bool {
        self.is_radial()
    }

    /// Depends on `|x|` only. Every symmetric kernel in d = 1 is.
    fn is_radial(&self) -> bool {
        self.dim() == 1
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClosedForm {
    /// `B_{alpha,d} |x|^-alpha`.
    Riesz { alpha: f64 },
    /// `exp(-|x| / scale)`.
    Exponential { scale: f64 },
    /// `exp(-|x|^2 / (2 scale^2))`.
    Gaussian { scale: f64 },
    /// `(1 + |x|)^-beta`.
    PowerDecay { beta: f64 },
    Constant,
}

/// Analytic kernel, scaled by `variance`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosedKernel {
    pub dim: usize,
    pub form: ClosedForm,
    pub variance: f64,
}

impl ClosedKernel {
    pub fn riesz(alpha: f64, dim: usize) -> Result<Self> {
        check_alpha(alpha, dim)?;
        Ok(Self { dim, form: ClosedForm::Riesz { alpha }, variance: 1.0 })
    }

    pub fn new(dim: usize, form: ClosedForm) -> Self {
        Self { dim, form, variance: 1.0 }
    }

    pub fn radial(&self, r: f64) -> f64 {
        self.variance
            * match self.form {
                ClosedForm::Riesz { alpha } => {
                    if alpha == 0.0 {
                        1.0
                    } else {
                        riesz_b(alpha, self.dim) * r.powf(-alpha)
                    }
                }
                ClosedForm::Exponential { scale } => (-r / scale).exp(),
                ClosedForm::Gaussian { scale } => (-0.5 * r * r / (scale * scale)).exp(),
                ClosedForm::PowerDecay { beta } => (1.0 + r).powf(-beta),
                ClosedForm::Constant => 1.0,
            }
    }
}

impl CovarianceKernel for ClosedKernel {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64]) -> f64 {
        self.radial(x.iter().map(|v| v * v).sum::<f64>().sqrt())
    }

    fn cell_self_energy(&self, h: f64) -> f64 {
        match self.form {
            ClosedForm::Riesz { alpha } if alpha > 0.0 => {
                self.variance * riesz_b(alpha, self.dim) * h.powf(-alpha) * cube_difference_moment(self.dim, alpha)
            }
            _ => self.eval(&vec![0.0; self.dim]),
        }
    }

    fn is_singular(&self) -> bool {
        matches!(self.form, ClosedForm::Riesz { alpha } if alpha > 0.0)
    }

    fn is_radial(&self) -> bool {
        true
    }
}

/// `E |U - V|^-alpha` for `U, V` independent uniform on the unit cube of R^d.
pub(crate) fn cube_difference_moment(d: usize, alpha: f64) -> f64 {
    if d == 1 {
        return 2.0 / ((1.0 - alpha) * (2.0 - alpha));
    }
    // The difference has density prod(1 - |w_k|) on [-1,1]^d. Split [0,1]^d into
    // d pyramids with w_1 = t the largest coordinate and w_j = t u_j; the radial
    // factor t^(d-1-alpha) is then integrated exactly against the polynomial in t.
    let df = d as f64;
    let inner = cube_quadrature(d - 1, 20, |u| {
        // coefficients of (1 - t) prod_j (1 - t u_j)
        let mut c = vec![1.0, -1.0];
        for &uj in u {
            let mut next = vec![0.0; c.len() + 1];
            for (k, &ck) in c.iter().enumerate() {
                next[k] += ck;
                next[k + 1] -= ck * uj;
            }
            c = next;
        }
        let t_int: f64 = c.iter().enumerate().map(|(k, &ck)| ck / (df - alpha + k as f64)).sum();
        let norm2 = 1.0 + u.iter().map(|v| v * v).sum::<f64>();
        norm2.powf(-alpha / 2.0) * t_int
    });
    2f64.powi(d as i32) * df * inner
}

impl CovarianceKernel for SpectralMeasure {
    fn dim(&self) -> usize {
        SpectralMeasure::dim(self)
    }

    fn eval(&self, x: &[f64]) -> f64 {
        self.covariance(x)
    }

    fn is_radial(&self) -> bool {
        SpectralMeasure::dim(self) == 1
            || (self.density().is_none()
                && self.singular().is_none()
                && self.atoms().iter().all(|a| a.freq.iter().all(|&v| v == 0.0)))
    }
}

/// Spatial grid for a kernel table: points `step * k` with `|k_i| <= extent / step`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelGrid {
    pub step: f64,
    pub extent: f64,
}

/// Covariance values on the cube of grid offsets `[-n, n]^d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelTable {
    pub dim: usize,
    pub step: f64,
    pub half: usize,
    pub values: Vec<f64>,
    pub closed_form: Option<ClosedForm>,
}

impl KernelTable {
    fn side(&self) -> usize {
        2 * self.half + 1
    }

    fn offset_index(&self, k: &[i64]) -> Option<usize> {
        let n = self.half as i64;
        let mut idx = 0usize;
        for &ki in k {
            if ki.abs() > n {
                return None;
            }
            idx = idx * self.side() + (ki + n) as usize;
        }
        Some(idx)
    }

    fn offset_point(&self, mut flat: usize) -> Vec<f64> {
        let mut p = vec![0.0; self.dim];
        for i in (0..self.dim).rev() {
            p[i] = ((flat % self.side()) as f64 - self.half as f64) * self.step;
            flat /= self.side();
        }
        p
    }

    fn tabulate<F: Fn(&[f64]) -> f64>(dim: usize, grid: KernelGrid, f: F) -> Self {
        let half = (grid.extent / grid.step).round() as usize;
        let mut t = Self { dim, step: grid.step, half, values: Vec::new(), closed_form: None };
        let n = t.side().pow(dim as u32);
        t.values = (0..n).map(|i| f(&t.offset_point(i))).collect();
        t
    }

    /// Table of an analytic kernel; singular kernels take their cell-averaged value at 0.
    pub fn from_closed_form(kernel: &ClosedKernel, grid: KernelGrid) -> Self {
        let mut t = Self::tabulate(kernel.dim, grid, |x| {
            if x.iter().all(|&v| v == 0.0) {
                kernel.cell_self_energy(grid.step)
            } else {
                kernel.eval(x)
            }
        });
        t.closed_form = Some(kernel.form);
        t
    }

    pub fn extent(&self) -> f64 {
        self.half as f64 * self.step
    }

    pub fn k0(&self) -> f64 {
        self.values[self.offset_index(&vec![0; self.dim]).unwrap()]
    }

    /// Value at an integer offset (in units of the table step).
    pub fn lookup(&self, k: &[i64]) -> Result<f64> {
        self.offset_index(k)
            .map(|i| self.values[i])
            .ok_or_else(|| LabError::Extent(format!("offset {k:?} beyond {} steps", self.half)))
    }

    /// Value at a displacement that must sit on the table grid.
    pub fn at(&self, x: &[f64]) -> Result<f64> {
        let mut k = Vec::with_capacity(self.dim);
        for &v in x {
            let q = v / self.step;
            let r = q.round();
            if (q - r).abs() > 1e-6 {
                return Err(LabError::Extent(format!("displacement {v} is off the table grid")));
            }
            k.push(r as i64);
        }
        self.lookup(&k)
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        let n = self.values.len();
        (0..n).all(|i| (self.values[i] - self.values[n - 1 - i]).abs() <= tol * (1.0 + self.values[i].abs()))
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let cols: Vec<String> = if self.dim == 1 { vec!["x".into()] } else { (1..=self.dim).map(|i| format!("x{i}")).collect() };
        let _ = writeln!(s, "{},K", cols.join(","));
        for (i, v) in self.values.iter().enumerate() {
            let p = self.offset_point(i);
            let xs: Vec<String> = p.iter().map(|x| format!("{x}")).collect();
            let _ = writeln!(s, "{},{v}", xs.join(","));
        }
        s
    }
}

impl CovarianceKernel for KernelTable {
    fn dim(&self) -> usize {
        self.dim
    }

    /// Grid lookup; linear interpolation between nodes in d = 1; NaN outside the table.
    fn eval(&self, x: &[f64]) -> f64 {
        if let Ok(v) = self.at(x) {
            return v;
        }
        if self.dim == 1 {
            let q = x[0] / self.step;
            let lo = q.floor();
            let t = q - lo;
            if let (Ok(a), Ok(b)) = (self.lookup(&[lo as i64]), self.lookup(&[lo as i64 + 1])) {
                return (1.0 - t) * a + t * b;
            }
        }
        f64::NAN
    }
}

/// Tabulates `K = F[mu]` on the grid.
pub fn kernel_from_measure(mu: &SpectralMeasure, grid: KernelGrid) -> Result<KernelTable> {
    if mu.is_empty() {
        return Err(LabError::Degenerate("spectral measure has zero mass".into()));
    }
    if !(grid.step > 0.0) || !(grid.extent >= 0.0) {
        return Err(LabError::Domain("kernel grid needs positive step".into()));
    }
    Ok(KernelTable::tabulate(mu.dim(), grid, |x| mu.covariance(x)))
}

/// Recovers `mu[B(delta)]` in d = 1 from a kernel table by the forward
/// transform `int K(x) sin(2 pi delta x) / (pi x) dx` on the table grid.
pub fn ball_mass_from_kernel(table: &KernelTable, delta: f64) -> Result<f64> {
    if table.dim != 1 {
        return Err(LabError::Domain("forward transform implemented for d = 1".into()));
    }
    let n = table.half as i64;
    let h = table.step;
    let mut s = 0.0;
    for k in -n..=n {
        let x = k as f64 * h;
        let w = if k.abs() == n { 0.5 } else { 1.0 };
        let f = if k == 0 { 2.0 * delta } else { (2.0 * PI * delta * x).sin() / (PI * x) };
        s += w * h * table.lookup(&[k])? * f;
    }
    Ok(s)
}
