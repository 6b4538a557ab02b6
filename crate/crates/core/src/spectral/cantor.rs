use serde::{Deserialize, Serialize};

use super::measure::SpectralMeasure;
use crate::error::{LabError, Result};

pub const MAX_DEPTH: u32 = 50;
const MAX_MATERIALIZED: u32 = 22;

/// Symbolic Cantor-type measure on `[1,2]`, mirrored onto `[-2,-1]`.
///
/// At depth `m` the support consists of the dyadic intervals
/// `[e, e + 2^-m]` with `e = 1 + sum_{j in J, j <= m} b_j 2^-j`; each carries
/// `2^-|J ∩ [m]|` of the one-sided mass, spread uniformly inside it. Half of
/// `mass` sits on each side.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CantorRecipe {
    /// Inclusive blocks `[s_{2n-1}, s_{2n}]` making up `J`; `None` as the upper end means unbounded.
    pub blocks: Vec<(u32, Option<u32>)>,
    pub depth: u32,
    pub mass: f64,
}

impl CantorRecipe {
    /// Builds `J` from `s_1 <= s_2 < s_3 <= s_4 < ...`; an odd-length sequence leaves the last block open.
    pub fn from_sequence(s: &[u32], depth: u32) -> Result<Self> {
        if depth > MAX_DEPTH {
            return Err(LabError::Construction(format!("depth {depth} exceeds {MAX_DEPTH}")));
        }
        if s.first() == Some(&0) {
            return Err(LabError::Construction("sequence entries must be positive".into()));
        }
        for (i, w) in s.windows(2).enumerate() {
            let ok = if i % 2 == 0 { w[0] <= w[1] } else { w[0] < w[1] };
            if !ok {
                return Err(LabError::Construction(format!("sequence not increasing at position {}", i + 1)));
            }
        }
        let blocks = s.chunks(2).map(|c| (c[0], c.get(1).copied())).collect();
        Ok(Self { blocks, depth, mass: 1.0 })
    }

    pub fn contains(&self, j: u32) -> bool {
        self.blocks.iter().any(|&(a, b)| j >= a && b.is_none_or(|b| j <= b))
    }

    /// `|J ∩ [q]|`.
    pub fn branching(&self, q: u32) -> u32 {
        (1..=q).filter(|&j| self.contains(j)).count() as u32
    }

    pub fn interval_width(&self) -> f64 {
        0.5f64.powi(self.depth as i32)
    }

    pub fn validate(&self) -> Result<()> {
        if self.depth > MAX_DEPTH {
            return Err(LabError::Construction(format!("depth {} exceeds {MAX_DEPTH}", self.depth)));
        }
        if !(self.mass >= 0.0) {
            return Err(LabError::Construction("negative singular mass".into()));
        }
        Ok(())
    }

    /// Exact one-sided probability of the dyadic interval `[k 2^-q, (k+1) 2^-q]`
    /// as a power of two exponent, or `None` if the interval is not selected.
    pub fn dyadic_exponent(&self, k: u64, q: u32) -> Option<u32> {
        if q > MAX_DEPTH || k < (1u64 << q) || k >= (2u64 << q) {
            return None;
        }
        let offset = k - (1u64 << q);
        for j in 1..=q {
            let bit = (offset >> (q - j)) & 1;
            if bit == 1 && !self.contains(j) {
                return None;
            }
        }
        Some(self.branching(q))
    }

    /// One-sided probability of a dyadic interval (0 if not selected).
    pub fn dyadic_mass(&self, k: u64, q: u32) -> f64 {
        self.dyadic_exponent(k, q).map_or(0.0, |e| 0.5f64.powi(e as i32))
    }

    /// One-sided distribution function `mu_E([1, x])` at the recipe depth.
    pub fn cdf(&self, x: f64) -> f64 {
        if x < 1.0 {
            return 0.0;
        }
        if x >= 2.0 {
            return 1.0;
        }
        let m = self.depth;
        let scaled = (x - 1.0) * (1u64 << m) as f64;
        let k = scaled.floor() as u64;
        let frac = scaled - k as f64;
        let free_after = |j: u32| ((j + 1)..=m).filter(|&i| self.contains(i)).count() as u32;
        let mut count: u64 = 0;
        let mut valid = true;
        for j in 1..=m {
            if (k >> (m - j)) & 1 == 1 {
                count += 1u64 << free_after(j);
                if !self.contains(j) {
                    valid = false;
                    break;
                }
            }
        }
        let partial = if valid { frac } else { 0.0 };
        (count as f64 + partial) * 0.5f64.powi(self.branching(m) as i32)
    }

    /// Two-sided mass of `[a, b]`.
    pub fn interval_mass(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        let pos = self.cdf(b) - self.cdf(a);
        let neg = self.cdf(-a) - self.cdf(-b);
        0.5 * self.mass * (pos + neg)
    }

    /// Two-sided mass of the ball `B(delta)`.
    pub fn ball_mass(&self, delta: f64) -> f64 {
        self.mass * self.cdf(delta)
    }

    /// Midpoints of the selected depth intervals on both sides with their masses.
    pub fn interval_midpoints(&self) -> Vec<(f64, f64)> {
        let m = self.depth;
        let free: Vec<u32> = (1..=m).filter(|&j| self.contains(j)).collect();
        assert!(free.len() as u32 <= MAX_MATERIALIZED, "too many Cantor intervals to materialize");
        let each = 0.5 * self.mass * 0.5f64.powi(free.len() as i32);
        let w = self.interval_width();
        let mut out = Vec::with_capacity(2 << free.len());
        for bits in 0u64..(1u64 << free.len()) {
            let mut e = 1.0;
            for (i, &j) in free.iter().enumerate() {
                if (bits >> i) & 1 == 1 {
                    e += 0.5f64.powi(j as i32);
                }
            }
            let c = e + 0.5 * w;
            out.push((c, each));
            out.push((-c, each));
        }
        out
    }

    /// Left endpoints of the selected one-sided depth intervals, ascending.
    pub fn left_endpoints(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.interval_midpoints().into_iter().filter(|p| p.0 > 0.0).map(|p| p.0 - 0.5 * self.interval_width()).collect();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    }
}

/// Cantor-type singular measure of total mass one, built from the sequence defining `J`.
pub fn cantor_measure(s_sequence: &[u32], depth: u32) -> Result<SpectralMeasure> {
    let recipe = CantorRecipe::from_sequence(s_sequence, depth)?;
    SpectralMeasure::new(1, false).with_singular(recipe)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_branching_single_interval() {
        let r = CantorRecipe::from_sequence(&[5, 6], 3).unwrap();
        assert_eq!(r.left_endpoints(), vec![1.0]);
        assert_eq!(r.dyadic_mass(8, 3), 1.0);
        assert!((r.cdf(1.125) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn j12_depth2_quarters() {
        let r = CantorRecipe::from_sequence(&[1, 2], 2).unwrap();
        assert_eq!(r.left_endpoints(), vec![1.0, 1.25, 1.5, 1.75]);
        for k in 4..8 {
            assert_eq!(r.dyadic_mass(k, 2), 0.25);
        }
    }

    #[test]
    fn j1_depth3_two_halves() {
        let r = CantorRecipe::from_sequence(&[1, 1], 3).unwrap();
        assert_eq!(r.left_endpoints(), vec![1.0, 1.5]);
        assert_eq!(r.dyadic_mass(8, 3), 0.5);
        assert_eq!(r.dyadic_mass(12, 3), 0.5);
        assert_eq!(r.dyadic_mass(9, 3), 0.0);
    }

    #[test]
    fn deep_cdf_uses_integer_counts() {
        let r = CantorRecipe::from_sequence(&[1, 20, 30, 50], 50).unwrap();
        assert!((r.cdf(1.5) - 0.5).abs() < 1e-15);
        assert_eq!(r.cdf(2.0), 1.0);
        assert!(CantorRecipe::from_sequence(&[1, 2], 51).is_err());
    }
}
