//! One-parameter model families swept by the QPT tooling.

use std::fmt;

use super::{build_general, build_xxz, build_xy, Direction, SpinHamiltonian};
use crate::error::{Error, Result};

/// A model family with its sweep parameter λ left free.
///
/// XXZ sweeps `λ = Δ`. XY sweeps `λ = ν = B_z / J`, critical at ν = 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ModelFamily {
    Xxz { j: f64 },
    Xy { j: f64, gamma: f64 },
}

impl ModelFamily {
    pub fn name(&self) -> &'static str {
        match self {
            ModelFamily::Xxz { .. } => "xxz",
            ModelFamily::Xy { .. } => "xy",
        }
    }

    pub fn lambda_name(&self) -> &'static str {
        match self {
            ModelFamily::Xxz { .. } => "delta",
            ModelFamily::Xy { .. } => "nu",
        }
    }

    pub fn j(&self) -> f64 {
        match *self {
            ModelFamily::Xxz { j } | ModelFamily::Xy { j, .. } => j,
        }
    }

    pub fn build(&self, n: usize, lambda: f64) -> Result<SpinHamiltonian> {
        match *self {
            ModelFamily::Xxz { j } => build_xxz(n, j, lambda),
            ModelFamily::Xy { j, gamma } => {
                if lambda < 0.0 {
                    return Err(Error::Validation(format!("nu must be nonnegative, got {lambda}")));
                }
                build_xy(n, j, gamma, lambda * j)
            }
        }
    }

    /// `∂H/∂λ`, independent of λ for both families.
    pub fn derivative(&self, n: usize) -> Result<SpinHamiltonian> {
        match *self {
            ModelFamily::Xxz { j } => build_general(
                n,
                (0..n.saturating_sub(1)).map(|i| ((Direction::Z, i, i + 1), j)),
                [],
            ),
            ModelFamily::Xy { j, .. } => {
                build_general(n, [], (0..n).map(|i| ((Direction::Z, i), j)))
            }
        }
    }

    /// Whether DMRG should add a small symmetry-breaking σᶻ field at λ.
    ///
    /// XXZ with Δ ≤ −1 has a degenerate ferromagnetic ground manifold.
    pub fn needs_bias(&self, lambda: f64) -> bool {
        matches!(self, ModelFamily::Xxz { .. }) && lambda <= -1.0
    }
}

impl fmt::Display for ModelFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelFamily::Xxz { j } => write!(f, "xxz(j={j})"),
            ModelFamily::Xy { j, gamma } => write!(f, "xy(j={j},gamma={gamma})"),
        }
    }
}

/// A family at a fixed size and parameter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelSpec {
    pub family: ModelFamily,
    pub n: usize,
    pub lambda: f64,
}

impl ModelSpec {
    pub fn build(&self) -> Result<SpinHamiltonian> {
        self.family.build(self.n, self.lambda)
    }

    /// Stable identifier used in file metadata.
    pub fn id(&self) -> String {
        format!("{}", self.family)
    }
}
