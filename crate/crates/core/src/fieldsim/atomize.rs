use std::collections::HashMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::numerics::cube_quadrature;
use crate::spectral::{CellProfile, SpectralMeasure};

/// One synthesis atom. A mirrored atom stands for the pair `±freq`, each of
/// mass `weight`; an unmirrored one is its own mirror (the origin, or a torus
/// frequency with every coordinate in `{0, -1/2}`) and carries `weight` alone.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthAtom {
    pub freq: Vec<f64>,
    pub weight: f64,
    pub mirrored: bool,
}

/// A purely atomic approximation of a spectral measure, ready for synthesis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomizedSpectrum {
    pub dim: usize,
    pub lattice: bool,
    pub atoms: Vec<SynthAtom>,
    /// Requested frequency resolution.
    pub resolution: f64,
    /// Total mass of the source measure.
    pub source_mass: f64,
    /// Largest distance any mass was moved.
    pub max_displacement: f64,
    /// `sum mass * displacement` over all moved mass.
    pub displacement_moment: f64,
}

fn torus_reduce(v: f64) -> f64 {
    v - (v + 0.5).floor()
}

fn is_self_mirror(v: f64, lattice: bool) -> bool {
    v == 0.0 || (lattice && v == -0.5)
}

/// Canonical representative of `±freq` and whether the pair collapses to one atom.
fn canonical(freq: &[f64], lattice: bool) -> (Vec<f64>, bool) {
    let mut f: Vec<f64> = freq.iter().map(|&v| if lattice { torus_reduce(v) } else { v } + 0.0).collect();
    match f.iter().position(|&v| !is_self_mirror(v, lattice)) {
        None => (f, true),
        Some(k) => {
            if f[k] < 0.0 {
                for v in f.iter_mut() {
                    if !is_self_mirror(*v, lattice) {
                        *v = -*v;
                    }
                }
            }
            (f, false)
        }
    }
}

impl AtomizedSpectrum {
    /// Replaces density cells by midpoint atoms of sub-cells no wider than
    /// `resolution` and a singular recipe by its interval midpoints; atoms of
    /// `mu` are kept as they are. Torus frequencies are reduced to `[-1/2, 1/2)`.
    pub fn new(mu: &SpectralMeasure, resolution: f64) -> Self {
        let d = mu.dim();
        let lattice = mu.is_lattice();
        let mut raw: Vec<(Vec<f64>, f64)> = mu.atoms().iter().map(|a| (a.freq.clone(), a.mass)).collect();
        let mut max_disp: f64 = 0.0;
        let mut moment = 0.0;
        if let Some(grid) = mu.density() {
            let m = if resolution > 0.0 { (grid.step / resolution - 1e-9).ceil().max(1.0) as usize } else { 1 };
            let sub = grid.step / m as f64;
            let disp = 0.5 * sub * (d as f64).sqrt();
            let per_cell = m.pow(d as u32);
            for c in 0..grid.cell_count() {
                let cell_mass = grid.masses[c];
                if cell_mass <= 0.0 {
                    continue;
                }
                let idx = grid.unravel(c);
                let centres: Vec<Vec<f64>> = (0..per_cell)
                    .map(|s| {
                        let mut rem = s;
                        let mut x = vec![0.0; d];
                        for k in (0..d).rev() {
                            let j = rem % m;
                            rem /= m;
                            let fine = (idx[k] * m + j) as i64;
                            x[k] = (2 * fine + 1 - (grid.counts[k] * m) as i64) as f64 * 0.5 * sub;
                        }
                        x
                    })
                    .collect();
                let masses: Vec<f64> = if m == 1 {
                    vec![cell_mass]
                } else if d == 1 {
                    centres.iter().map(|x| grid.interval_mass(c, x[0] - 0.5 * sub, x[0] + 0.5 * sub)).collect()
                } else {
                    match grid.profile {
                        CellProfile::Uniform => vec![cell_mass / per_cell as f64; per_cell],
                        CellProfile::RadialPower { exponent, .. } => {
                            let raw_w: Vec<f64> = centres
                                .iter()
                                .map(|x| {
                                    let mut y = vec![0.0; d];
                                    cube_quadrature(d, 4, |u| {
                                        for k in 0..d {
                                            y[k] = x[k] + (u[k] - 0.5) * sub;
                                        }
                                        y.iter().map(|v| v * v).sum::<f64>().powf(exponent / 2.0)
                                    })
                                })
                                .collect();
                            let tot: f64 = raw_w.iter().sum();
                            raw_w.iter().map(|w| cell_mass * w / tot).collect()
                        }
                    }
                };
                for (x, w) in centres.into_iter().zip(masses) {
                    if w > 0.0 {
                        raw.push((x, w));
                    }
                }
                max_disp = max_disp.max(disp);
                moment += cell_mass * disp;
            }
        }
        if let Some(s) = mu.singular() {
            let half = 0.5 * s.interval_width();
            for (x, w) in s.interval_midpoints() {
                raw.push((vec![x], w));
            }
            if s.mass > 0.0 {
                max_disp = max_disp.max(half);
                moment += s.mass * half;
            }
        }
        let mut groups: HashMap<Vec<u64>, SynthAtom> = HashMap::new();
        for (f, w) in raw {
            if w <= 0.0 {
                continue;
            }
            let (c, single) = canonical(&f, lattice);
            let key = c.iter().map(|v| v.to_bits()).collect();
            let share = if single { w } else { 0.5 * w };
            groups.entry(key).or_insert_with(|| SynthAtom { freq: c, weight: 0.0, mirrored: !single }).weight += share;
        }
        let mut atoms: Vec<SynthAtom> = groups.into_values().collect();
        atoms.sort_by(|a, b| a.freq.partial_cmp(&b.freq).unwrap());
        Self {
            dim: d,
            lattice,
            atoms,
            resolution,
            source_mass: mu.total_mass(),
            max_displacement: max_disp,
            displacement_moment: moment,
        }
    }

    /// Total mass, counting both members of every mirrored pair.
    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| if a.mirrored { 2.0 * a.weight } else { a.weight }).sum()
    }

    /// Number of atoms counting mirrors separately.
    pub fn atom_count(&self) -> usize {
        self.atoms.iter().map(|a| if a.mirrored { 2 } else { 1 }).sum()
    }

    /// Exact covariance of the synthesized field at lag `x`.
    pub fn covariance(&self, x: &[f64]) -> f64 {
        self.atoms
            .iter()
            .map(|a| {
                let c = (2.0 * PI * a.freq.iter().zip(x).map(|(l, v)| l * v).sum::<f64>()).cos();
                if a.mirrored {
                    2.0 * a.weight * c
                } else {
                    a.weight * c
                }
            })
            .sum()
    }

    /// Bound on `|K_atomized(x) - K(x)|` for `|x| <= max_lag`.
    pub fn covariance_bias_bound(&self, max_lag: f64) -> f64 {
        2.0 * PI * max_lag * self.displacement_moment
    }

    /// The atomized spectrum as a spectral measure, for capacity solves that
    /// must match the sampled covariance exactly.
    pub fn to_measure(&self) -> SpectralMeasure {
        let mut m = SpectralMeasure::new(self.dim, self.lattice);
        for a in &self.atoms {
            m = if a.mirrored { m.with_pair(a.freq.clone(), a.weight) } else { m.with_atom(a.freq.clone(), a.weight) };
        }
        m
    }
}

/// Convenience wrapper for [`AtomizedSpectrum::new`].
pub fn atomize(mu: &SpectralMeasure, resolution: f64) -> AtomizedSpectrum {
    AtomizedSpectrum::new(mu, resolution)
}
