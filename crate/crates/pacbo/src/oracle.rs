//! Empirical check of the sampler against a grid normalization of the target
//! on small problems (`d <= 2`, `p <= 3`).

use pacbo_core::loss::ScoreContext;
use pacbo_core::proposal::{tau_schedule, KMeansCache};
use pacbo_core::rjmcmc::Kernel;
use pacbo_core::rng::{purpose_rng, Purpose};
use pacbo_core::target::{grid_oracle, GridSpec};
use pacbo_core::{KMeansConfig, PriorSpec, TargetDensity};
use serde::{Deserialize, Serialize};

use crate::error::{AppError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSpec {
    pub d: usize,
    pub p: usize,
    pub radius: f64,
    #[serde(default)]
    pub eta: f64,
    /// Inverse temperature of the target; 0 gives the prior.
    pub lambda: f64,
    pub data: Vec<Vec<f64>>,
    /// Losses of the past predictions, one per observation.
    pub output_losses: Vec<f64>,
    /// `lambda_0..lambda_{t-1}` weighting the variance terms.
    pub lambdas: Vec<f64>,
    #[serde(default = "default_cells")]
    pub cells_per_dim: usize,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

fn default_cells() -> usize {
    120
}
fn default_iterations() -> usize {
    20_000
}
fn default_burn_in() -> usize {
    1_000
}
fn default_tolerance() -> f64 {
    0.05
}

impl OracleSpec {
    /// Three one-dimensional observations, three possible clusters.
    pub fn toy() -> Self {
        OracleSpec {
            d: 1,
            p: 3,
            radius: 1.0,
            eta: 0.0,
            lambda: 1.2,
            data: vec![vec![-0.8], vec![0.1], vec![0.9]],
            output_losses: vec![0.4, 0.3, 0.5],
            lambdas: vec![1.5, 1.5, 1.2],
            cells_per_dim: default_cells(),
            iterations: default_iterations(),
            burn_in: default_burn_in(),
            seed: 0,
            tolerance: default_tolerance(),
        }
    }

    /// Prior target (`lambda = 0`, `eta = 0`, `p = 2`); the k-marginal is uniform.
    pub fn prior() -> Self {
        OracleSpec {
            p: 2,
            radius: 0.25,
            lambda: 0.0,
            data: vec![vec![-0.2], vec![0.025], vec![0.225]],
            iterations: 100_000,
            tolerance: 0.02,
            ..Self::toy()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub chain_marginal: Vec<f64>,
    pub oracle_marginal: Vec<f64>,
    pub tv: f64,
    pub tolerance: f64,
    pub pass: bool,
}

pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

pub fn oracle_check(spec: &OracleSpec) -> Result<OracleReport> {
    if spec.d > 2 || spec.p > 3 {
        return Err(AppError::Input(format!("grid oracle supports d <= 2 and p <= 3, got d = {} and p = {}", spec.d, spec.p)));
    }
    if spec.data.is_empty() {
        return Err(AppError::Input("the oracle check needs at least one observation".into()));
    }
    if spec.data.iter().any(|x| x.len() != spec.d) {
        return Err(AppError::Input("every observation needs d coordinates".into()));
    }
    if spec.iterations == 0 {
        return Err(AppError::Input("iterations must be at least 1".into()));
    }
    let t = spec.data.len();
    let flat: Vec<f64> = spec.data.concat();
    let prior = PriorSpec::uniform(spec.p, spec.d, spec.radius, spec.eta)?;
    let ctx = ScoreContext::new(spec.d, &flat, &spec.output_losses, &spec.lambdas)?;
    let target = TargetDensity::new(spec.lambda, ctx, &prior)?;
    let oracle = grid_oracle(&target, GridSpec { cells_per_dim: spec.cells_per_dim })?;

    let mut cache = KMeansCache::new(KMeansConfig::default(), spec.seed, 1e-6 * spec.radius.max(1.0));
    cache.sync(t);
    let mut locations = cache.bind(&flat, spec.d);
    let kernel = Kernel::new(target, tau_schedule(spec.p, t + 1))?;
    let init = kernel.warm_start(1, &mut locations)?;
    let mut rng = purpose_rng(spec.seed, Purpose::Oracle, 0);
    let (_, trace) = kernel.run_chain(init, spec.burn_in + spec.iterations, &mut locations, &mut rng, true)?;
    let chain_marginal = trace.k_marginal(spec.p, spec.burn_in);
    let oracle_marginal = oracle.marginal();
    let tv = total_variation(&chain_marginal, &oracle_marginal);
    Ok(OracleReport { chain_marginal, oracle_marginal, tv, tolerance: spec.tolerance, pass: tv <= spec.tolerance })
}
