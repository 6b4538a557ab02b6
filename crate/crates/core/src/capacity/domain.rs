use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Finite point set standing in for a compact domain.
///
/// Grid domains also keep integer coordinates (`point = spacing * coord`),
/// which enables orbit reduction and exact distance tables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteDomain {
    pub dim: usize,
    pub spacing: f64,
    /// Points of Z^d rather than cells of a continuum discretization.
    pub lattice: bool,
    points: Vec<Vec<f64>>,
    coords: Option<Vec<Vec<i64>>>,
}

impl DiscreteDomain {
    /// Arbitrary points; `spacing` is the cell size they stand for.
    pub fn from_points(points: Vec<Vec<f64>>, spacing: f64) -> Result<Self> {
        let dim = points.first().map(|p| p.len()).ok_or_else(|| LabError::Domain("empty domain".into()))?;
        if !(spacing > 0.0) {
            return Err(LabError::Domain("spacing must be positive".into()));
        }
        if points.iter().any(|p| p.len() != dim) {
            return Err(LabError::Domain("points of mixed dimension".into()));
        }
        for i in 0..points.len() {
            for j in 0..i {
                if points[i] == points[j] {
                    return Err(LabError::Domain(format!("repeated point {:?}", points[i])));
                }
            }
        }
        Ok(Self { dim, spacing, lattice: false, points, coords: None })
    }

    fn from_coords(dim: usize, spacing: f64, lattice: bool, coords: Vec<Vec<i64>>) -> Result<Self> {
        if coords.is_empty() {
            return Err(LabError::Domain("empty domain".into()));
        }
        if !(spacing > 0.0) {
            return Err(LabError::Domain("spacing must be positive".into()));
        }
        let points = coords.iter().map(|k| k.iter().map(|&v| v as f64 * spacing).collect()).collect();
        Ok(Self { dim, spacing, lattice, points, coords: Some(coords) })
    }

    /// Grid points `spacing * k`, `k` in Z^d, inside the closed ball `B(radius)`.
    pub fn ball(dim: usize, radius: f64, spacing: f64) -> Result<Self> {
        Self::annulus(dim, 0.0, radius, spacing)
    }

    /// `Z^d` intersected with `B(radius)`.
    pub fn lattice_ball(dim: usize, radius: f64) -> Result<Self> {
        let mut d = Self::annulus(dim, 0.0, radius, 1.0)?;
        d.lattice = true;
        Ok(d)
    }

    /// Grid points with `inner <= |x| <= outer`.
    pub fn annulus(dim: usize, inner: f64, outer: f64, spacing: f64) -> Result<Self> {
        if dim == 0 || !(outer >= 0.0) || !(spacing > 0.0) {
            return Err(LabError::Domain("invalid ball parameters".into()));
        }
        let m = (outer / spacing).floor() as i64;
        let (lo2, hi2) = ((inner / spacing).powi(2), (outer / spacing).powi(2));
        let slack = 1e-9 * hi2.max(1.0);
        let mut coords = Vec::new();
        let mut k = vec![-m; dim];
        loop {
            let r2: f64 = k.iter().map(|&v| (v * v) as f64).sum();
            if r2 <= hi2 + slack && r2 >= lo2 - slack {
                coords.push(k.clone());
            }
            let mut axis = dim;
            loop {
                if axis == 0 {
                    return Self::from_coords(dim, spacing, false, coords);
                }
                axis -= 1;
                if k[axis] < m {
                    k[axis] += 1;
                    break;
                }
                k[axis] = -m;
            }
        }
    }

    /// Grid points of `[a, b]` in d = 1.
    pub fn interval(a: f64, b: f64, spacing: f64) -> Result<Self> {
        let lo = (a / spacing - 1e-9).ceil() as i64;
        let hi = (b / spacing + 1e-9).floor() as i64;
        Self::from_coords(1, spacing, false, (lo..=hi).map(|k| vec![k]).collect())
    }

    pub fn union(&self, other: &DiscreteDomain) -> Result<Self> {
        if self.dim != other.dim || self.spacing != other.spacing || self.lattice != other.lattice {
            return Err(LabError::Domain("domains on different grids".into()));
        }
        match (&self.coords, &other.coords) {
            (Some(a), Some(b)) => {
                let mut c = a.clone();
                c.extend(b.iter().filter(|k| !a.contains(k)).cloned());
                Self::from_coords(self.dim, self.spacing, self.lattice, c)
            }
            _ => {
                let mut p = self.points.clone();
                p.extend(other.points.iter().filter(|x| !self.points.contains(x)).cloned());
                Self::from_points(p, self.spacing)
            }
        }
    }

    /// Points translated by `shift`; integer coordinates survive when the shift is a grid vector.
    pub fn translated(&self, shift: &[f64]) -> Result<Self> {
        let grid_shift: Option<Vec<i64>> = shift
            .iter()
            .map(|&s| {
                let k = (s / self.spacing).round();
                ((k * self.spacing - s).abs() < 1e-12 * self.spacing.max(1.0)).then_some(k as i64)
            })
            .collect();
        match (&self.coords, grid_shift) {
            (Some(c), Some(g)) => Self::from_coords(
                self.dim,
                self.spacing,
                self.lattice,
                c.iter().map(|k| k.iter().zip(&g).map(|(a, b)| a + b).collect()).collect(),
            ),
            _ => Self::from_points(
                self.points.iter().map(|p| p.iter().zip(shift).map(|(a, b)| a + b).collect()).collect(),
                self.spacing,
            ),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn coords(&self) -> Option<&[Vec<i64>]> {
        self.coords.as_deref()
    }

    pub fn radius(&self) -> f64 {
        self.points.iter().map(|p| p.iter().map(|v| v * v).sum::<f64>().sqrt()).fold(0.0, f64::max)
    }

    /// Whether the integer point set is closed under coordinate permutations and sign flips.
    pub fn is_hyperoctahedral(&self) -> bool {
        let Some(c) = &self.coords else { return false };
        let set: std::collections::HashSet<&Vec<i64>> = c.iter().collect();
        c.iter().all(|k| {
            let mut flipped = k.clone();
            flipped[0] = -flipped[0];
            let mut swapped = k.clone();
            if self.dim > 1 {
                swapped.swap(0, 1);
            }
            let mut rotated = k.clone();
            rotated.rotate_left(1);
            set.contains(&flipped) && set.contains(&swapped) && set.contains(&rotated)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_counts() {
        assert_eq!(DiscreteDomain::ball(1, 1.0, 0.25).unwrap().len(), 9);
        // 2-d lattice points with x^2 + y^2 <= 4
        assert_eq!(DiscreteDomain::lattice_ball(2, 2.0).unwrap().len(), 13);
        assert!(DiscreteDomain::ball(3, 1.0, 0.5).unwrap().is_hyperoctahedral());
    }

    #[test]
    fn union_and_translation() {
        let a = DiscreteDomain::interval(0.0, 1.0, 0.5).unwrap();
        let b = a.translated(&[0.5]).unwrap();
        assert_eq!(a.union(&b).unwrap().len(), 4);
        assert!(!b.is_hyperoctahedral());
    }

    #[test]
    fn rejects_duplicates() {
        assert!(DiscreteDomain::from_points(vec![vec![0.0], vec![0.0]], 1.0).is_err());
    }
}
