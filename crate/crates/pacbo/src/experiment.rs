//! Repeated runs on the synthetic benchmark stream.

use std::time::Instant;

use pacbo_core::bounds::bound_corollary3;
use pacbo_core::config::KMeansConfig;
use pacbo_core::datagen::{generate, Stream, SyntheticSpec};
use pacbo_core::metrics::{correct_k_count, mean_sd, ocl, ocl_kmeans_config, regret_report, RegretReport, RepetitionResult};
use pacbo_core::rng::{derive_seed, purpose_rng, Purpose};
use pacbo_core::{OnlineClusterer, PacboConfig, PriorSpec, RunRecord};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{AppError, Result};

/// Runs the online clusterer over `data`, timing each sampling step.
pub fn run_timed(data: &[f64], cfg: &PacboConfig) -> Result<RunRecord> {
    run_timed_with_prior(data, cfg, PriorSpec::from_config(cfg)?)
}

fn run_timed_with_prior(data: &[f64], cfg: &PacboConfig, prior: PriorSpec) -> Result<RunRecord> {
    if !data.len().is_multiple_of(cfg.d) {
        return Err(AppError::Input(format!("stream length {} is not a multiple of d = {}", data.len(), cfg.d)));
    }
    let mut clusterer = OnlineClusterer::with_prior(cfg.clone(), prior)?;
    let mut steps = Vec::with_capacity(data.len() / cfg.d);
    // c_hat_1 is a prior draw; its sampling time is not measured
    let mut pending: Option<f64> = None;
    for x in data.chunks_exact(cfg.d) {
        let start = Instant::now();
        let mut step = clusterer.observe(x)?;
        step.wall_time_secs = pending;
        pending = Some(start.elapsed().as_secs_f64());
        steps.push(step);
    }
    Ok(clusterer.finish(steps))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Settings {
    pub reps: usize,
    pub horizon: usize,
    pub seed: u64,
    pub config: PacboConfig,
    /// k-means settings for the oracle loss.
    pub ocl: KMeansConfig,
}

impl Table1Settings {
    /// Benchmark settings: `T = 200`, `p = 20`, `R = 15`, `N = 500`, default schedule.
    pub fn benchmark(reps: usize, seed: u64) -> Self {
        Table1Settings { reps, horizon: 200, seed, config: PacboConfig::default(), ocl: ocl_kmeans_config() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepetitionOutcome {
    pub rep: usize,
    pub seed: u64,
    pub correct_k: usize,
    pub max_obs_norm: f64,
    pub elapsed_secs: f64,
    pub result: RepetitionResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Outcome {
    pub reps: Vec<RepetitionOutcome>,
    pub mean_correct_k: f64,
    pub sd_correct_k: Option<f64>,
    pub k_true: Vec<usize>,
    pub report: RegretReport,
}

impl Table1Outcome {
    /// Observations outside the ball of radius `R`, summed over repetitions.
    pub fn outliers(&self, radius: f64) -> usize {
        self.reps.iter().filter(|r| r.max_obs_norm > radius).count()
    }
}

/// Stream of repetition `rep`: the benchmark model drawn from the repetition's own seed.
pub fn benchmark_stream(horizon: usize, seed: u64) -> Result<Stream> {
    Ok(generate(&SyntheticSpec::TenGroups { horizon }, &mut purpose_rng(seed, Purpose::DataGen, 0))?)
}

fn one_repetition(settings: &Table1Settings, prior: &PriorSpec, rep: usize) -> Result<RepetitionOutcome> {
    let seed = derive_seed(settings.seed, rep as u64);
    let start = Instant::now();
    let stream = benchmark_stream(settings.horizon, seed)?;
    let k_true = stream.k_true.clone().expect("benchmark streams carry k_true");
    let cfg = PacboConfig { seed, ..settings.config.clone() };
    let record = run_timed_with_prior(&stream.data, &cfg, prior.clone())?;
    let ks = record.k_sequence();
    let d = stream.d;
    let ocl_curve = (1..=settings.horizon)
        .map(|t| ocl(&stream.data[..t * d], d, k_true[t - 1], cfg.radius, &settings.ocl, seed))
        .collect::<pacbo_core::Result<Vec<_>>>()?;
    Ok(RepetitionOutcome {
        rep,
        seed,
        correct_k: correct_k_count(&ks, &k_true)?,
        max_obs_norm: stream.max_norm(),
        elapsed_secs: start.elapsed().as_secs_f64(),
        result: RepetitionResult { cumulative_losses: record.cumulative_losses(), ks, ocl: ocl_curve },
    })
}

/// Runs `reps` independent repetitions in parallel and aggregates them.
pub fn replicate_table1(settings: &Table1Settings) -> Result<Table1Outcome> {
    if settings.reps == 0 {
        return Err(AppError::Input("reps must be at least 1".into()));
    }
    if settings.config.d != 2 {
        return Err(AppError::Input("the benchmark stream is two-dimensional; set d = 2".into()));
    }
    let prior = PriorSpec::from_config(&settings.config)?;
    let reps = (0..settings.reps)
        .into_par_iter()
        .map(|rep| one_repetition(settings, &prior, rep))
        .collect::<Result<Vec<_>>>()?;
    let k_true: Vec<usize> = (1..=settings.horizon).map(pacbo_core::datagen::benchmark_true_k).collect();
    let cfg = &settings.config;
    let results: Vec<RepetitionResult> = reps.iter().map(|r| r.result.clone()).collect();
    let report = regret_report(&results, &k_true, cfg.p, |t, k| {
        bound_corollary3(k, t, cfg.d, cfg.radius, cfg.eta, cfg.p).unwrap_or(f64::NAN)
    })?;
    let counts: Vec<f64> = reps.iter().map(|r| r.correct_k as f64).collect();
    let (mean, sd) = mean_sd(&counts);
    Ok(Table1Outcome { reps, mean_correct_k: mean, sd_correct_k: sd, k_true, report })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_replication_is_deterministic() {
        let mut s = Table1Settings::benchmark(2, 5);
        s.horizon = 25;
        s.config.chain_length = 30;
        s.ocl.restarts = 3;
        let a = replicate_table1(&s).unwrap();
        let b = replicate_table1(&s).unwrap();
        assert_eq!(a.reps.len(), 2);
        assert_eq!(a.report, b.report);
        assert_eq!(a.report.rows.len(), 25);
        assert_eq!(a.report.correct_k, a.reps.iter().map(|r| r.correct_k).collect::<Vec<_>>());
        assert!(a.sd_correct_k.is_some());
        for row in &a.report.rows {
            assert!(row.ocl >= 0.0 && row.ecl >= 0.0 && row.bound_cor3 > 0.0);
        }
    }

    #[test]
    fn timing_fills_all_but_first_step() {
        let cfg = PacboConfig { d: 1, p: 3, radius: 2.0, chain_length: 10, ..PacboConfig::default() };
        let rec = run_timed(&[0.1, 0.2, -0.3], &cfg).unwrap();
        assert!(rec.steps[0].wall_time_secs.is_none());
        assert!(rec.steps[1..].iter().all(|s| s.wall_time_secs.is_some()));
        let plain = pacbo_core::run_stream(&[0.1, 0.2, -0.3], &cfg).unwrap();
        assert_eq!(plain.k_sequence(), rec.k_sequence());
        assert_eq!(plain.final_centers, rec.final_centers);
    }
}
