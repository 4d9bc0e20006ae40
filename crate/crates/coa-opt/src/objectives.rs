//! Built-in calibration objectives and the objective selector used by the
//! bench harness.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::SearchSpace;

/// `f(x) = sum x_j^2`; global minimum 0 at the origin.
pub fn sphere(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// `f(x) = sum 100 (x_{j+1} - x_j^2)^2 + (1 - x_j)^2`; global minimum 0 at
/// `(1, ..., 1)`.
pub fn rosenbrock(x: &[f64]) -> f64 {
    x.windows(2)
        .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2))
        .sum()
}

/// `f(x) = 10 n + sum x_j^2 - 10 cos(2 pi x_j)`; global minimum 0 at the
/// origin.
pub fn rastrigin(x: &[f64]) -> f64 {
    10.0 * x.len() as f64
        + x.iter()
            .map(|v| v * v - 10.0 * (2.0 * std::f64::consts::PI * v).cos())
            .sum::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveKind {
    Sphere,
    Rosenbrock,
    Rastrigin,
    LotSizing,
}

impl fmt::Display for ObjectiveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            ObjectiveKind::Sphere => "sphere",
            ObjectiveKind::Rosenbrock => "rosenbrock",
            ObjectiveKind::Rastrigin => "rastrigin",
            ObjectiveKind::LotSizing => "lot_sizing",
        };
        f.write_str(name)
    }
}

impl FromStr for ObjectiveKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sphere" => Ok(ObjectiveKind::Sphere),
            "rosenbrock" => Ok(ObjectiveKind::Rosenbrock),
            "rastrigin" => Ok(ObjectiveKind::Rastrigin),
            "lot_sizing" => Ok(ObjectiveKind::LotSizing),
            other => Err(Error::Config(format!(
                "unknown objective '{other}' (expected sphere, rosenbrock, rastrigin, or lot_sizing)"
            ))),
        }
    }
}

impl ObjectiveKind {
    /// The evaluation function for the analytic objectives; `None` for
    /// `lot_sizing`, which needs instance data.
    pub fn analytic_fn(&self) -> Option<fn(&[f64]) -> f64> {
        match self {
            ObjectiveKind::Sphere => Some(sphere),
            ObjectiveKind::Rosenbrock => Some(rosenbrock),
            ObjectiveKind::Rastrigin => Some(rastrigin),
            ObjectiveKind::LotSizing => None,
        }
    }
}

/// A named objective with its dimension and default bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct BuiltinObjective {
    pub name: ObjectiveKind,
    pub dim: usize,
    pub bounds: SearchSpace,
}

impl BuiltinObjective {
    /// Builds one of the three analytic objectives on its customary bounds.
    pub fn analytic(name: ObjectiveKind, dim: usize) -> Result<Self> {
        let bounds = match name {
            ObjectiveKind::Sphere => SearchSpace::uniform(dim, -5.0, 5.0)?,
            ObjectiveKind::Rosenbrock => SearchSpace::uniform(dim, -2.048, 2.048)?,
            ObjectiveKind::Rastrigin => SearchSpace::uniform(dim, -5.12, 5.12)?,
            ObjectiveKind::LotSizing => {
                return Err(Error::Config(
                    "lot_sizing needs an instance file, not analytic bounds".into(),
                ))
            }
        };
        Ok(BuiltinObjective { name, dim, bounds })
    }

    /// Known global minimum value, available for the analytic functions.
    pub fn known_optimum(&self) -> Option<f64> {
        match self.name {
            ObjectiveKind::LotSizing => None,
            _ => Some(0.0),
        }
    }
}
