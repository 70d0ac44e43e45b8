//! Canonical coordinates and the admissible domain.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default minimal separation between coordinates (and from zero where the
/// dual product is involved).
pub const DEFAULT_DELTA_SEP: f64 = 1e-3;

/// A point in canonical coordinates `(u^1, ..., u^n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(u: Vec<f64>) -> Result<Self> {
        if u.len() < 2 {
            return Err(Error::Invalid(format!(
                "dimension must be at least 2, got {}",
                u.len()
            )));
        }
        if u.iter().any(|x| !x.is_finite()) {
            return Err(Error::Invalid(format!("non-finite coordinate in {u:?}")));
        }
        Ok(Self(u))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.0
    }

    /// Smallest pairwise gap `|u^i - u^j|`.
    pub fn min_gap(&self) -> f64 {
        let u = &self.0;
        let mut gap = f64::INFINITY;
        for i in 0..u.len() {
            for j in (i + 1)..u.len() {
                gap = gap.min((u[i] - u[j]).abs());
            }
        }
        gap
    }

    /// Smallest `|u^i|`.
    pub fn min_abs(&self) -> f64 {
        self.0.iter().fold(f64::INFINITY, |m, x| m.min(x.abs()))
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Local length scale: the distance to the nearest collision or zero
    /// coordinate.
    pub fn local_scale(&self) -> f64 {
        self.min_gap().min(self.min_abs())
    }

    /// Copy of the point with `u^l` moved by `h`.
    pub fn shifted(&self, l: usize, h: f64) -> Point {
        let mut u = self.0.clone();
        u[l] += h;
        Point(u)
    }

    /// `u + s (1, ..., 1)`.
    pub fn translated(&self, s: f64) -> Point {
        Point(self.0.iter().map(|x| x + s).collect())
    }

    pub fn scaled(&self, lambda: f64) -> Point {
        Point(self.0.iter().map(|x| lambda * x).collect())
    }

    /// Rejects coordinate collisions closer than `delta_sep`.
    pub fn check_separated(&self, delta_sep: f64) -> Result<()> {
        let gap = self.min_gap();
        if gap < delta_sep {
            return Err(Error::Domain(format!(
                "coordinate collision at {:?}: min gap {gap:e} < {delta_sep:e}",
                self.0
            )));
        }
        Ok(())
    }

    /// Rejects coordinates closer than `delta_sep` to zero (dual product domain).
    pub fn check_nonzero(&self, delta_sep: f64) -> Result<()> {
        let m = self.min_abs();
        if m < delta_sep {
            return Err(Error::Domain(format!(
                "zero coordinate at {:?}: min |u^i| = {m:e} < {delta_sep:e}",
                self.0
            )));
        }
        Ok(())
    }

    pub fn check_dim(&self, n: usize) -> Result<()> {
        if self.dim() != n {
            return Err(Error::Invalid(format!(
                "expected a point of dimension {n}, got {}",
                self.dim()
            )));
        }
        Ok(())
    }
}

impl std::ops::Index<usize> for Point {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl TryFrom<Vec<f64>> for Point {
    type Error = Error;
    fn try_from(u: Vec<f64>) -> Result<Self> {
        Point::new(u)
    }
}

impl TryFrom<&[f64]> for Point {
    type Error = Error;
    fn try_from(u: &[f64]) -> Result<Self> {
        Point::new(u.to_vec())
    }
}
