use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::cantor::CantorRecipe;
use super::{check_alpha, riesz_a};
use crate::error::{LabError, Result};
use crate::numerics::{cube_quadrature, legendre, sinc};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub freq: Vec<f64>,
    pub mass: f64,
}

/// How mass is distributed inside a density cell.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CellProfile {
    /// Constant density within each cell.
    Uniform,
    /// Density `coefficient * |lambda|^exponent` within each cell.
    RadialPower { coefficient: f64, exponent: f64 },
}

/// Uniform frequency grid centred at the origin. Axis `k` spans
/// `[-counts[k] * step / 2, counts[k] * step / 2]`; cells are stored row-major
/// with the last axis fastest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityGrid {
    pub step: f64,
    pub counts: Vec<usize>,
    pub masses: Vec<f64>,
    pub profile: CellProfile,
}

impl DensityGrid {
    /// Grid with cell masses `value * cell volume` taken from `values`.
    pub fn from_values(step: f64, counts: Vec<usize>, values: &[f64]) -> Result<Self> {
        let n: usize = counts.iter().product();
        if values.len() != n {
            return Err(LabError::Construction(format!("{} values for {} cells", values.len(), n)));
        }
        let vol = step.powi(counts.len() as i32);
        Ok(Self { step, counts, masses: values.iter().map(|v| v * vol).collect(), profile: CellProfile::Uniform })
    }

    /// Grid whose cell masses integrate `density` with a 4-point tensor rule.
    pub fn from_density<F: Fn(&[f64]) -> f64>(step: f64, counts: Vec<usize>, density: F) -> Self {
        let d = counts.len();
        let mut g = Self { step, counts, masses: Vec::new(), profile: CellProfile::Uniform };
        let n = g.cell_count();
        let vol = step.powi(d as i32);
        let mut x = vec![0.0; d];
        g.masses = (0..n)
            .map(|c| {
                let lo = g.cell_lower(c);
                vol * cube_quadrature(d, 4, |u| {
                    for k in 0..d {
                        x[k] = lo[k] + u[k] * step;
                    }
                    density(&x)
                })
            })
            .collect();
        g
    }

    pub fn dim(&self) -> usize {
        self.counts.len()
    }

    pub fn cell_count(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn cell_volume(&self) -> f64 {
        self.step.powi(self.dim() as i32)
    }

    pub fn half_width(&self, axis: usize) -> f64 {
        self.counts[axis] as f64 * self.step / 2.0
    }

    pub fn unravel(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for k in (0..self.dim()).rev() {
            idx[k] = flat % self.counts[k];
            flat /= self.counts[k];
        }
        idx
    }

    pub fn ravel(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.counts).fold(0, |acc, (&i, &n)| acc * n + i)
    }

    pub fn cell_lower(&self, flat: usize) -> Vec<f64> {
        self.unravel(flat)
            .iter()
            .enumerate()
            .map(|(k, &i)| (2 * i as i64 - self.counts[k] as i64) as f64 * 0.5 * self.step)
            .collect()
    }

    pub fn cell_upper(&self, flat: usize) -> Vec<f64> {
        self.unravel(flat)
            .iter()
            .enumerate()
            .map(|(k, &i)| (2 * i as i64 + 2 - self.counts[k] as i64) as f64 * 0.5 * self.step)
            .collect()
    }

    pub fn cell_center(&self, flat: usize) -> Vec<f64> {
        self.cell_lower(flat).into_iter().map(|v| v + 0.5 * self.step).collect()
    }

    /// Density value of a cell (mass over volume).
    pub fn value(&self, flat: usize) -> f64 {
        self.masses[flat] / self.cell_volume()
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    /// Index of the cell mirrored through the origin.
    pub fn mirror(&self, flat: usize) -> usize {
        let idx: Vec<usize> = self.unravel(flat).iter().zip(&self.counts).map(|(&i, &n)| n - 1 - i).collect();
        self.ravel(&idx)
    }

    /// `int_cell f(lambda) d mu(lambda)` for one cell, exact for the cell profile up to Gauss-Legendre error.
    pub fn cell_integral<F: Fn(&[f64]) -> f64>(&self, flat: usize, nodes: usize, f: F) -> f64 {
        let d = self.dim();
        let lo = self.cell_lower(flat);
        let h = self.step;
        match self.profile {
            CellProfile::RadialPower { coefficient, exponent } if d == 1 => {
                let alpha = exponent + 1.0;
                let (a, b) = (lo[0], lo[0] + h);
                let sign = if a + b >= 0.0 { 1.0 } else { -1.0 };
                let (p, q) = if sign > 0.0 { (a.max(0.0), b) } else { ((-b).max(0.0), -a) };
                let (u0, u1) = (p.powf(alpha), q.powf(alpha));
                let rule = legendre(nodes);
                let half = 0.5 * (u1 - u0);
                let mid = 0.5 * (u1 + u0);
                let s: f64 = rule
                    .iter()
                    .map(|&(t, w)| w * f(&[sign * (mid + half * t).powf(1.0 / alpha)]))
                    .sum();
                coefficient / alpha * half * s
            }
            _ => {
                let mut x = vec![0.0; d];
                let mean = cube_quadrature(d, nodes.min(8), |u| {
                    for k in 0..d {
                        x[k] = lo[k] + u[k] * h;
                    }
                    f(&x)
                });
                mean * self.masses[flat]
            }
        }
    }

    /// Mass of a one-dimensional cell inside `[a, b]`, exact for the cell profile.
    pub fn interval_mass(&self, flat: usize, a: f64, b: f64) -> f64 {
        let (lo, hi) = (self.cell_lower(flat)[0], self.cell_upper(flat)[0]);
        let (p, q) = (lo.max(a), hi.min(b));
        if q <= p {
            return 0.0;
        }
        match self.profile {
            CellProfile::Uniform => self.masses[flat] * (q - p) / self.step,
            CellProfile::RadialPower { coefficient, exponent } => {
                let alpha = exponent + 1.0;
                let prim = |t: f64| t.signum() * t.abs().powf(alpha);
                coefficient / alpha * (prim(q) - prim(p))
            }
        }
    }

    /// Mass of the cell inside the closed ball `B(delta)`.
    fn cell_ball_mass(&self, flat: usize, delta: f64) -> f64 {
        let d = self.dim();
        let lo = self.cell_lower(flat);
        let h = self.step;
        let mut near = 0.0;
        let mut far = 0.0;
        for (&l, &u) in lo.iter().zip(&self.cell_upper(flat)) {
            let n = if l > 0.0 { l } else if u < 0.0 { -u } else { 0.0 };
            let f = l.abs().max(u.abs());
            near += n * n;
            far += f * f;
        }
        if far.sqrt() <= delta {
            return self.masses[flat];
        }
        if near.sqrt() > delta {
            return 0.0;
        }
        if d == 1 {
            return self.interval_mass(flat, -delta, delta);
        }
        // 4^d subcell midpoints
        let sub = 4usize;
        let total = sub.pow(d as u32);
        let mut inside = 0usize;
        for s in 0..total {
            let mut rem = s;
            let mut r2 = 0.0;
            for &l in lo.iter() {
                let k = rem % sub;
                rem /= sub;
                let c = l + (k as f64 + 0.5) * h / sub as f64;
                r2 += c * c;
            }
            if r2.sqrt() <= delta {
                inside += 1;
            }
        }
        self.masses[flat] * inside as f64 / total as f64
    }
}

/// A finite, symmetric, nonnegative measure on R^d (or on the torus when
/// `lattice` is set) built from atoms, a gridded density and an optional
/// Cantor-type singular part.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralMeasure {
    pub schema_version: u32,
    dim: usize,
    #[serde(default)]
    lattice: bool,
    #[serde(default)]
    atoms: Vec<Atom>,
    #[serde(default)]
    density: Option<DensityGrid>,
    #[serde(default)]
    singular: Option<CantorRecipe>,
}

impl SpectralMeasure {
    pub fn new(dim: usize, lattice: bool) -> Self {
        Self { schema_version: SCHEMA_VERSION, dim, lattice, atoms: Vec::new(), density: None, singular: None }
    }

    pub fn delta0(mass: f64, dim: usize) -> Self {
        Self::new(dim, false).with_atom(vec![0.0; dim], mass)
    }

    /// Symmetric pair of atoms at `±freq`, each of mass `mass`.
    pub fn cosine_pair(freq: Vec<f64>, mass: f64) -> Self {
        let d = freq.len();
        Self::new(d, false).with_pair(freq, mass)
    }

    /// Flat torus spectrum on the `n` Fourier frequencies `k/n`: the field is
    /// i.i.d. standard normal on any `n` consecutive lattice sites.
    pub fn iid_lattice(n: usize) -> Self {
        let mut m = Self::new(1, true);
        for k in 0..n {
            let mut f = k as f64 / n as f64;
            if f >= 0.5 {
                f -= 1.0;
            }
            m.atoms.push(Atom { freq: vec![f], mass: 1.0 / n as f64 });
        }
        m
    }

    pub fn with_atom(mut self, freq: Vec<f64>, mass: f64) -> Self {
        self.atoms.push(Atom { freq, mass });
        self
    }

    pub fn with_pair(mut self, freq: Vec<f64>, mass: f64) -> Self {
        let neg = freq.iter().map(|v| -v).collect();
        self.atoms.push(Atom { freq, mass });
        self.atoms.push(Atom { freq: neg, mass });
        self
    }

    pub fn with_density(mut self, grid: DensityGrid) -> Result<Self> {
        if grid.dim() != self.dim {
            return Err(LabError::Construction("density grid dimension mismatch".into()));
        }
        self.density = Some(grid);
        Ok(self)
    }

    pub fn with_singular(mut self, recipe: CantorRecipe) -> Result<Self> {
        if self.dim != 1 {
            return Err(LabError::Construction("singular recipe requires d = 1".into()));
        }
        self.singular = Some(recipe);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_lattice(&self) -> bool {
        self.lattice
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn density(&self) -> Option<&DensityGrid> {
        self.density.as_ref()
    }

    pub fn singular(&self) -> Option<&CantorRecipe> {
        self.singular.as_ref()
    }

    /// `m`: total mass of the absolutely continuous part.
    pub fn ac_mass(&self) -> f64 {
        self.density.as_ref().map_or(0.0, |g| g.total_mass())
    }

    pub fn atomic_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum()
    }

    pub fn singular_mass(&self) -> f64 {
        self.singular.as_ref().map_or(0.0, |s| s.mass)
    }

    /// Mass of the atom at the origin.
    pub fn origin_mass(&self) -> f64 {
        self.atoms.iter().filter(|a| a.freq.iter().all(|&v| v == 0.0)).map(|a| a.mass).sum()
    }

    pub fn total_mass(&self) -> f64 {
        self.atomic_mass() + self.ac_mass() + self.singular_mass()
    }

    pub fn is_empty(&self) -> bool {
        self.total_mass() <= 0.0
    }

    /// Sum of two measures. Densities are added cellwise and must share a grid.
    pub fn plus(&self, other: &SpectralMeasure) -> Result<SpectralMeasure> {
        if self.dim != other.dim || self.lattice != other.lattice {
            return Err(LabError::Construction("measures live on different spaces".into()));
        }
        let mut out = self.clone();
        out.atoms.extend(other.atoms.iter().cloned());
        out.density = match (&self.density, &other.density) {
            (None, None) => None,
            (Some(g), None) | (None, Some(g)) => Some(g.clone()),
            (Some(a), Some(b)) => {
                if a.step != b.step || a.counts != b.counts || a.profile != b.profile {
                    return Err(LabError::Construction("density grids differ".into()));
                }
                let mut g = a.clone();
                for (m, n) in g.masses.iter_mut().zip(&b.masses) {
                    *m += n;
                }
                Some(g)
            }
        };
        out.singular = match (&self.singular, &other.singular) {
            (Some(_), Some(_)) => return Err(LabError::Construction("two singular recipes".into())),
            (a, b) => a.clone().or(b.clone()),
        };
        Ok(out)
    }

    pub fn scaled(&self, c: f64) -> SpectralMeasure {
        let mut out = self.clone();
        for a in &mut out.atoms {
            a.mass *= c;
        }
        if let Some(g) = &mut out.density {
            for m in &mut g.masses {
                *m *= c;
            }
            if let CellProfile::RadialPower { coefficient, .. } = &mut g.profile {
                *coefficient *= c;
            }
        }
        if let Some(s) = &mut out.singular {
            s.mass *= c;
        }
        out
    }

    /// The measure `g(lambda) d mu(lambda)`. Density cells become uniform cells
    /// holding the integrated mass; a singular recipe is materialized to atoms.
    pub fn reweighted<F: Fn(&[f64]) -> f64>(&self, g: F) -> SpectralMeasure {
        let mut out = SpectralMeasure::new(self.dim, self.lattice);
        out.atoms = self.atoms.iter().map(|a| Atom { freq: a.freq.clone(), mass: a.mass * g(&a.freq) }).collect();
        if let Some(grid) = &self.density {
            let masses = (0..grid.cell_count()).map(|c| grid.cell_integral(c, 16, &g)).collect();
            out.density = Some(DensityGrid { step: grid.step, counts: grid.counts.clone(), masses, profile: CellProfile::Uniform });
        }
        if let Some(s) = &self.singular {
            for (x, w) in s.interval_midpoints() {
                out.atoms.push(Atom { freq: vec![x], mass: w * g(&[x]) });
            }
        }
        out
    }

    /// Checks nonnegativity, finiteness and Hermitian symmetry.
    pub fn validate(&self, tol: f64) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(LabError::Serialization(format!("unsupported schema version {}", self.schema_version)));
        }
        if self.dim == 0 {
            return Err(LabError::Construction("dimension must be positive".into()));
        }
        for a in &self.atoms {
            if a.freq.len() != self.dim || !(a.mass >= 0.0) || !a.mass.is_finite() {
                return Err(LabError::Construction(format!("invalid atom {a:?}")));
            }
            let mirrored: f64 = self
                .atoms
                .iter()
                .filter(|b| self.same_point(&b.freq, &a.freq.iter().map(|v| -v).collect::<Vec<_>>()))
                .map(|b| b.mass)
                .sum();
            let here: f64 = self.atoms.iter().filter(|b| self.same_point(&b.freq, &a.freq)).map(|b| b.mass).sum();
            if (mirrored - here).abs() > tol * here.max(1.0) {
                return Err(LabError::Construction(format!("atom at {:?} has no mirror", a.freq)));
            }
        }
        if let Some(g) = &self.density {
            if g.dim() != self.dim || g.masses.len() != g.cell_count() || !(g.step > 0.0) {
                return Err(LabError::Construction("malformed density grid".into()));
            }
            for c in 0..g.cell_count() {
                let m = g.masses[c];
                if !(m >= 0.0) || !m.is_finite() {
                    return Err(LabError::Construction(format!("negative or non-finite cell mass {m}")));
                }
                if (m - g.masses[g.mirror(c)]).abs() > tol * m.max(1e-300).max(1.0) {
                    return Err(LabError::Construction("density grid is not symmetric".into()));
                }
            }
        }
        if let Some(s) = &self.singular {
            s.validate()?;
        }
        Ok(())
    }

    fn same_point(&self, a: &[f64], b: &[f64]) -> bool {
        a.iter().zip(b).all(|(&x, &y)| {
            let diff = x - y;
            if self.lattice {
                let r = diff - diff.round();
                r.abs() < 1e-12
            } else {
                diff.abs() < 1e-12 * (1.0 + x.abs())
            }
        })
    }

    /// `mu[B(delta)]` for the closed ball.
    pub fn ball_mass(&self, delta: f64) -> f64 {
        let mut m: f64 = self
            .atoms
            .iter()
            .filter(|a| a.freq.iter().map(|v| v * v).sum::<f64>().sqrt() <= delta)
            .map(|a| a.mass)
            .sum();
        if let Some(g) = &self.density {
            m += (0..g.cell_count()).map(|c| g.cell_ball_mass(c, delta)).sum::<f64>();
        }
        if let Some(s) = &self.singular {
            m += s.ball_mass(delta);
        }
        m
    }

    /// `mu[u + B(delta)]` for the closed ball centred at `u` (density cells by
    /// midpoint inclusion, singular part via its dyadic distribution).
    pub fn shifted_ball_mass(&self, u: &[f64], delta: f64) -> f64 {
        let dist = |x: &[f64]| x.iter().zip(u).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let mut m: f64 = self.atoms.iter().filter(|a| dist(&a.freq) <= delta).map(|a| a.mass).sum();
        if let Some(g) = &self.density {
            if g.dim() == 1 {
                m += (0..g.cell_count()).map(|c| g.interval_mass(c, u[0] - delta, u[0] + delta)).sum::<f64>();
            } else {
                m += (0..g.cell_count()).filter(|&c| dist(&g.cell_center(c)) <= delta).map(|c| g.masses[c]).sum::<f64>();
            }
        }
        if let Some(s) = &self.singular {
            m += s.interval_mass(u[0] - delta, u[0] + delta);
        }
        m
    }

    /// Covariance `K(x) = int cos(2 pi <lambda, x>) d mu(lambda)`.
    pub fn covariance(&self, x: &[f64]) -> f64 {
        let dot = |f: &[f64]| f.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        let mut k: f64 = self.atoms.iter().map(|a| a.mass * (2.0 * PI * dot(&a.freq)).cos()).sum();
        if let Some(g) = &self.density {
            k += density_covariance(g, x);
        }
        if let Some(s) = &self.singular {
            let w = s.interval_width();
            k += s
                .interval_midpoints()
                .iter()
                .map(|&(c, m)| m * (2.0 * PI * c * x[0]).cos() * sinc(PI * w * x[0]))
                .sum::<f64>();
        }
        k
    }

    /// `int |F[nu](lambda)|^2 d mu(lambda)` for a signed measure on points.
    pub fn spectral_energy(&self, points: &[Vec<f64>], weights: &[f64]) -> f64 {
        let transform_sq = |lam: &[f64]| {
            let (mut re, mut im) = (0.0, 0.0);
            for (p, &w) in points.iter().zip(weights) {
                let ph = -2.0 * PI * lam.iter().zip(p).map(|(a, b)| a * b).sum::<f64>();
                re += w * ph.cos();
                im += w * ph.sin();
            }
            re * re + im * im
        };
        let mut e: f64 = self.atoms.iter().map(|a| a.mass * transform_sq(&a.freq)).sum();
        if let Some(g) = &self.density {
            e += (0..g.cell_count()).map(|c| g.cell_integral(c, 16, transform_sq)).sum::<f64>();
        }
        if let Some(s) = &self.singular {
            e += s.interval_midpoints().iter().map(|&(c, m)| m * transform_sq(&[c])).sum::<f64>();
        }
        e
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| LabError::Serialization(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(s).map_err(|e| LabError::Serialization(e.to_string()))?;
        m.validate(1e-9)?;
        Ok(m)
    }
}

fn density_covariance(g: &DensityGrid, x: &[f64]) -> f64 {
    match g.profile {
        CellProfile::RadialPower { .. } if g.dim() == 1 => {
            let h = g.step;
            let nodes = (8.0 + 4.0 * (x[0] * h).abs()).ceil().min(120.0) as usize;
            // symmetric grid: integrate the positive half twice
            (0..g.cell_count())
                .filter(|&c| g.cell_lower(c)[0] >= -1e-12 * h)
                .map(|c| 2.0 * g.cell_integral(c, nodes, |l| (2.0 * PI * l[0] * x[0]).cos()))
                .sum()
        }
        _ => {
            let sincs: f64 = x.iter().map(|&v| sinc(PI * g.step * v)).product();
            (0..g.cell_count())
                .map(|c| {
                    let ctr = g.cell_center(c);
                    let ph = 2.0 * PI * ctr.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
                    g.masses[c] * ph.cos()
                })
                .sum::<f64>()
                * sincs
        }
    }
}

/// The alpha-Riesz spectral measure restricted to the cube `[-half_width, half_width]^d`.
///
/// `alpha = 0` gives the unit atom at the origin. For `alpha > 0` the grid has
/// an even number of cells per axis so no cell is centred at the origin, and
/// every cell mass is an exact integral of `A |lambda|^(alpha - d)`.
pub fn riesz_measure(alpha: f64, d: usize, step: f64, half_width: f64) -> Result<SpectralMeasure> {
    check_alpha(alpha, d)?;
    if alpha == 0.0 {
        return Ok(SpectralMeasure::delta0(1.0, d));
    }
    if !(step > 0.0) || !(half_width >= step) {
        return Err(LabError::Domain("grid step and half width must be positive".into()));
    }
    let half_cells = (half_width / step).round() as usize;
    let counts = vec![2 * half_cells; d];
    let a = riesz_a(alpha, d);
    let profile = CellProfile::RadialPower { coefficient: a, exponent: alpha - d as f64 };
    let mut grid = DensityGrid { step, counts, masses: Vec::new(), profile };
    let n = grid.cell_count();
    let masses = if d == 1 {
        (0..n)
            .map(|c| {
                let (lo, hi) = (grid.cell_lower(c)[0], grid.cell_upper(c)[0]);
                let (p, q) = if lo >= 0.0 { (lo, hi) } else { (-hi, -lo) };
                a / alpha * (q.powf(alpha) - p.powf(alpha))
            })
            .collect()
    } else {
        // corner cells: pyramid decomposition of the cube around the origin
        let pyramid = cube_quadrature(d - 1, 24, |u| {
            (1.0 + u.iter().map(|v| v * v).sum::<f64>()).powf((alpha - d as f64) / 2.0)
        });
        let corner = a * step.powf(alpha) * d as f64 / alpha * pyramid;
        (0..n)
            .map(|c| {
                let lo = grid.cell_lower(c);
                let touches = lo.iter().all(|&l| l.abs() < 1e-12 * step || (l + step).abs() < 1e-12 * step);
                if touches {
                    return corner;
                }
                let mut x = vec![0.0; d];
                step.powi(d as i32)
                    * cube_quadrature(d, 6, |u| {
                        for k in 0..d {
                            x[k] = lo[k] + u[k] * step;
                        }
                        a * x.iter().map(|v| v * v).sum::<f64>().powf((alpha - d as f64) / 2.0)
                    })
            })
            .collect()
    };
    grid.masses = masses;
    SpectralMeasure::new(d, false).with_density(grid)
}
