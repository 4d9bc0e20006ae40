use rand::RngExt;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A bounded real-valued search space with per-dimension bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl SearchSpace {
    /// Builds a space from per-dimension bounds. Every dimension must satisfy
    /// `lower[j] < upper[j]` and both bounds must be finite.
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() {
            return Err(Error::Config("search space must have dim >= 1".into()));
        }
        if lower.len() != upper.len() {
            return Err(Error::Config(format!(
                "bound lengths differ: lower has {}, upper has {}",
                lower.len(),
                upper.len()
            )));
        }
        for (j, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !lo.is_finite() || !hi.is_finite() {
                return Err(Error::Config(format!("non-finite bound at dimension {j}")));
            }
            if lo >= hi {
                return Err(Error::Config(format!(
                    "lower bound {lo} is not below upper bound {hi} at dimension {j}"
                )));
            }
        }
        Ok(SearchSpace { lower, upper })
    }

    /// Convenience constructor: `dim` dimensions sharing the same `[lo, hi]` interval.
    pub fn uniform(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("search space must have dim >= 1".into()));
        }
        SearchSpace::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    /// Width of dimension `j`.
    pub fn range(&self, j: usize) -> f64 {
        self.upper[j] - self.lower[j]
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(&self.lower)
                .zip(&self.upper)
                .all(|((v, lo), hi)| *v >= *lo && *v <= *hi)
    }

    /// Clamps every coordinate into its bounds, in place.
    pub fn clip(&self, x: &mut [f64]) {
        for ((v, lo), hi) in x.iter_mut().zip(&self.lower).zip(&self.upper) {
            *v = v.clamp(*lo, *hi);
        }
    }

    /// Draws one point uniformly at random within the bounds.
    pub fn sample_uniform(&self, rng: &mut impl rand::Rng) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| rng.random_range(*lo..=*hi))
            .collect()
    }

    /// Infinity-norm distance between two points with each coordinate
    /// difference divided by the dimension's range.
    pub fn normalized_inf_distance(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .enumerate()
            .map(|(j, (x, y))| (x - y).abs() / self.range(j))
            .fold(0.0, f64::max)
    }
}

/// Infinity-norm distance on raw coordinates.
pub fn inf_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
