//! Run configurations. Every field has a default, so a config file only needs
//! the keys it changes; unknown keys are rejected.

use serde::{Deserialize, Serialize};
use sgflab::capacity::{Resolution, SolverConfig};
use sgflab::persistence::{Estimator, RepulsionConfig, SingularityHypothesis, TestMeasure};
use sgflab::spectral::{
    cantor_measure, riesz_measure, CellProfile, ClosedForm, ClosedKernel, DensityGrid, SpectralMeasure,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairConfig {
    pub freq: Vec<f64>,
    pub mass: f64,
}

/// Spectral measure of the field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpectrumConfig {
    /// Constant field of variance `mass`.
    Delta0 { mass: f64, dim: usize },
    /// I.i.d. standard normals on `n` consecutive lattice sites.
    IidLattice { n: usize },
    /// Riesz density `A |lambda|^{alpha-d}` on a grid of cubes.
    Riesz { alpha: f64, dim: usize, step: f64, half_width: f64 },
    /// Origin atom plus symmetric atom pairs.
    Atoms {
        dim: usize,
        #[serde(default)]
        lattice: bool,
        origin_mass: f64,
        #[serde(default)]
        pairs: Vec<PairConfig>,
    },
    /// Lattice field on Z with density `c |lambda|^{alpha-1}` on the torus, scaled to total `mass`.
    LatticePower { alpha: f64, mass: f64, cells: usize },
    /// Cantor-type singular measure from the block sequence of `J`.
    Cantor { sequence: Vec<u32>, depth: u32 },
    /// Measure JSON as written by the library.
    File { path: String },
}

impl SpectrumConfig {
    pub fn build(&self) -> Result<SpectralMeasure, String> {
        let mu = match self {
            SpectrumConfig::Delta0 { mass, dim } => SpectralMeasure::delta0(*mass, *dim),
            SpectrumConfig::IidLattice { n } => {
                if *n == 0 {
                    return Err("iid_lattice needs n >= 1".into());
                }
                SpectralMeasure::iid_lattice(*n)
            }
            SpectrumConfig::Riesz { alpha, dim, step, half_width } => {
                riesz_measure(*alpha, *dim, *step, *half_width).map_err(|e| e.to_string())?
            }
            SpectrumConfig::Atoms { dim, lattice, origin_mass, pairs } => {
                let mut m = SpectralMeasure::new(*dim, *lattice);
                if *origin_mass > 0.0 {
                    m = m.with_atom(vec![0.0; *dim], *origin_mass);
                }
                for p in pairs {
                    if p.freq.len() != *dim {
                        return Err(format!("pair frequency {:?} is not {dim}-dimensional", p.freq));
                    }
                    m = m.with_pair(p.freq.clone(), p.mass);
                }
                m
            }
            SpectrumConfig::LatticePower { alpha, mass, cells } => lattice_power(*alpha, *mass, *cells)?,
            SpectrumConfig::Cantor { sequence, depth } => cantor_measure(sequence, *depth).map_err(|e| e.to_string())?,
            SpectrumConfig::File { path } => {
                let text = std::fs::read_to_string(path).map_err(|e| format!("{path}: {e}"))?;
                SpectralMeasure::from_json(&text).map_err(|e| e.to_string())?
            }
        };
        mu.validate(1e-9).map_err(|e| e.to_string())?;
        if mu.is_empty() {
            return Err("spectral measure has no mass".into());
        }
        Ok(mu)
    }
}

fn lattice_power(alpha: f64, mass: f64, cells: usize) -> Result<SpectralMeasure, String> {
    if !(alpha > 0.0 && alpha <= 1.0) || !(mass > 0.0) || cells < 2 || cells % 2 == 1 {
        return Err("lattice_power needs alpha in (0, 1], mass > 0 and an even cell count".into());
    }
    // int_{-1/2}^{1/2} c |lambda|^{alpha-1} = 2c (1/2)^alpha / alpha
    let c = mass * alpha * 0.5f64.powf(1.0 - alpha);
    let step = 1.0 / cells as f64;
    let masses = (0..cells)
        .map(|i| {
            let lo = i as f64 * step - 0.5;
            let hi = lo + step;
            let (p, q) = if lo >= 0.0 { (lo, hi) } else { (-hi, -lo) };
            c / alpha * (q.powf(alpha) - p.powf(alpha))
        })
        .collect();
    let grid = DensityGrid {
        step,
        counts: vec![cells],
        masses,
        profile: CellProfile::RadialPower { coefficient: c, exponent: alpha - 1.0 },
    };
    SpectralMeasure::new(1, true).with_density(grid).map_err(|e| e.to_string())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RieszTableConfig {
    pub alpha_list: Vec<f64>,
    pub d_list: Vec<usize>,
    /// Radii at which `h_alpha` is sampled.
    pub radii: Vec<f64>,
}

impl Default for RieszTableConfig {
    fn default() -> Self {
        Self { alpha_list: vec![0.0, 0.5, 1.0, 1.5], d_list: vec![1, 2, 3], radii: vec![0.0, 0.5, 1.0, 1.5, 2.0] }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TruncationConfig {
    pub v: f64,
    pub range: f64,
}

impl Default for TruncationConfig {
    fn default() -> Self {
        Self { v: 0.5, range: 80.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelSource {
    Closed { kernel: ClosedKernel },
    Spectrum { spectrum: SpectrumConfig },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CapacityConfig {
    pub kernel: KernelSource,
    pub radii: Vec<f64>,
    pub resolution: Resolution,
    pub solver: SolverConfig,
    /// Structural inequality checks; spectral kernels only.
    pub validators: bool,
    pub truncation: TruncationConfig,
}

impl Default for CapacityConfig {
    fn default() -> Self {
        Self {
            kernel: KernelSource::Closed { kernel: ClosedKernel::new(3, ClosedForm::Riesz { alpha: 1.0 }) },
            radii: vec![1.0],
            resolution: Resolution::Absolute { spacing: 1.0 / 16.0 },
            solver: SolverConfig::default(),
            validators: false,
            truncation: TruncationConfig::default(),
        }
    }
}

/// Where the persistence event is evaluated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainConfig {
    /// Discretized balls `B(T)`, one per radius.
    Ball { radii: Vec<f64>, resolution: Resolution },
    /// One explicit point set.
    Points { points: Vec<Vec<f64>>, spacing: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PersistConfig {
    pub spectrum: SpectrumConfig,
    /// Cell size used to replace density and singular parts by atoms.
    pub atomize_resolution: f64,
    pub domain: DomainConfig,
    pub levels: Vec<f64>,
    pub n_samples: usize,
    pub seed: u64,
    pub estimator: Estimator,
    /// Enables the predictor columns and the default tilt `l_T`.
    pub hypothesis: Option<SingularityHypothesis>,
    pub solver: SolverConfig,
}

impl Default for PersistConfig {
    fn default() -> Self {
        Self {
            spectrum: SpectrumConfig::IidLattice { n: 8 },
            atomize_resolution: 0.1,
            domain: DomainConfig::Points { points: (0..8).map(|k| vec![k as f64]).collect(), spacing: 1.0 },
            levels: vec![0.0],
            n_samples: 100_000,
            seed: 1,
            estimator: Estimator::Naive,
            hypothesis: None,
            solver: SolverConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RepulsionRunConfig {
    pub spectrum: SpectrumConfig,
    pub atomize_resolution: f64,
    pub hypothesis: SingularityHypothesis,
    pub radii: Vec<f64>,
    pub eta: TestMeasure,
    pub experiment: RepulsionConfig,
}

impl Default for RepulsionRunConfig {
    fn default() -> Self {
        Self {
            spectrum: SpectrumConfig::LatticePower { alpha: 0.5, mass: 1.0, cells: 512 },
            atomize_resolution: 1.0 / 512.0,
            hypothesis: SingularityHypothesis { alpha: 0.5, m: 1.0 },
            radii: vec![4.0, 8.0, 16.0],
            eta: TestMeasure::Tent,
            experiment: RepulsionConfig { seed: 1, ..RepulsionConfig::default() },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IrregularConfig {
    pub alpha: f64,
    pub epsilon: f64,
    /// Odd ratios `T_i / T_{i-1}`.
    pub ratios: Vec<u64>,
    pub truncation: TruncationConfig,
    pub spacing: f64,
    /// Number of jump scales solved, smallest first.
    pub max_jumps: usize,
    /// Capacity ratio the jump must exceed.
    pub rho: f64,
    pub solver: SolverConfig,
}

impl Default for IrregularConfig {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            epsilon: 0.9,
            ratios: vec![3, 5, 7],
            truncation: TruncationConfig::default(),
            spacing: 0.125,
            max_jumps: 1,
            rho: 2.0,
            solver: SolverConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CantorConfig {
    pub sequence: Vec<u32>,
    pub depth: u32,
}

impl Default for CantorConfig {
    fn default() -> Self {
        Self { sequence: vec![1, 2], depth: 2 }
    }
}
