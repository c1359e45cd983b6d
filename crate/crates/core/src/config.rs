//! Run configuration.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::schedule::LambdaSchedule;

/// Family of the per-dimension prior `pi_k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PriorKind {
    /// Product of uniform laws on the ball of radius `2R`.
    #[default]
    UniformBall,
    /// Product of Student(3) laws with scale `tau0`, truncated to the ball of radius `2R`.
    TruncatedStudent { tau0: f64 },
}

/// Lloyd's algorithm settings for the proposal locations and the oracle loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KMeansConfig {
    pub restarts: usize,
    pub max_iter: usize,
    /// Relative decrease of the within-cluster loss below which Lloyd stops.
    pub tol: f64,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        KMeansConfig { restarts: 10, max_iter: 100, tol: 1e-8 }
    }
}

/// All parameters of an online clustering run.
///
/// `radius` is `R` in the units of the observations; the prior lives on the
/// ball of radius `2R`. The defaults reproduce the synthetic benchmark
/// settings: `d = 2`, `p = 20`, `R = 15`, `N = 500`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PacboConfig {
    pub d: usize,
    /// Maximum number of cells.
    pub p: usize,
    pub radius: f64,
    /// Decay of the prior on the number of cells, `q(k) ~ exp(-eta k)`.
    pub eta: f64,
    pub prior: PriorKind,
    pub lambda: LambdaSchedule,
    /// Iterations of the reversible-jump chain per time step.
    pub chain_length: usize,
    /// Leading chain iterations excluded from diagnostics.
    pub burn_in: usize,
    pub seed: u64,
    pub kmeans: KMeansConfig,
    pub record_trace: bool,
    /// Monte Carlo sample count for the truncated Student normalizer.
    pub student_norm_samples: usize,
}

impl Default for PacboConfig {
    fn default() -> Self {
        PacboConfig {
            d: 2,
            p: 20,
            radius: 15.0,
            eta: 0.0,
            prior: PriorKind::UniformBall,
            lambda: LambdaSchedule::PacboDefault,
            chain_length: 500,
            burn_in: 0,
            seed: 0,
            kmeans: KMeansConfig::default(),
            record_trace: false,
            student_norm_samples: 1_000_000,
        }
    }
}

impl PacboConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(invalid("d", "must be at least 1"));
        }
        if self.p == 0 {
            return Err(invalid("p", "must be at least 1"));
        }
        match self.prior {
            PriorKind::UniformBall => {
                if !(self.radius > 0.0 && self.radius.is_finite()) {
                    return Err(invalid("radius", "must be positive and finite"));
                }
            }
            PriorKind::TruncatedStudent { tau0 } => {
                if !(self.radius > 0.0) {
                    return Err(invalid("radius", "must be positive"));
                }
                if !(tau0 > 0.0 && tau0.is_finite()) {
                    return Err(invalid("tau0", "must be positive"));
                }
                if self.student_norm_samples == 0 {
                    return Err(invalid("student_norm_samples", "must be positive"));
                }
            }
        }
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return Err(invalid("eta", "must be non-negative"));
        }
        if self.chain_length == 0 {
            return Err(invalid("chain_length", "must be at least 1"));
        }
        if self.kmeans.restarts == 0 || self.kmeans.max_iter == 0 {
            return Err(invalid("kmeans", "restarts and max_iter must be positive"));
        }
        if !(self.kmeans.tol >= 0.0) {
            return Err(invalid("kmeans.tol", "must be non-negative"));
        }
        self.lambda.validate()
    }
}
