//! The online loop: reveal `x_t`, pay `l(c_hat_t, x_t)`, then sample
//! `c_hat_{t+1}` from the quasi-posterior built on `x_1..x_t`.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::centers::Centers;
use crate::config::PacboConfig;
use crate::error::{invalid, Error, Result};
use crate::loss::{loss_flat, StreamHistory};
use crate::prior::PriorSpec;
use crate::proposal::{tau_schedule, KMeansCache};
use crate::rjmcmc::{ChainTrace, Kernel};
use crate::rng::{purpose_rng, Purpose};
use crate::target::TargetDensity;

/// What happened at time `t`: the prediction `c_hat_t` that was in force when
/// `x_t` arrived, its loss, and optionally the chain that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: usize,
    pub k: usize,
    pub centers: Centers,
    pub loss: f64,
    pub cumulative_loss: f64,
    /// Chain run that produced `centers`; absent at `t = 1` and when traces are off.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<ChainTrace>,
    /// Sampling time for `centers`, filled in by callers that can measure it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_secs: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub steps: Vec<StepRecord>,
    /// `c_hat_{T+1}`, the prediction after the last observation.
    pub final_centers: Centers,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_trace: Option<ChainTrace>,
}

impl RunRecord {
    /// `K_t` for `t = 1..T`.
    pub fn k_sequence(&self) -> Vec<usize> {
        self.steps.iter().map(|s| s.k).collect()
    }

    pub fn cumulative_losses(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.cumulative_loss).collect()
    }
}

/// Incremental form of the algorithm. Holds the current prediction.
#[derive(Debug, Clone)]
pub struct OnlineClusterer {
    cfg: PacboConfig,
    prior: PriorSpec,
    history: StreamHistory,
    cache: KMeansCache,
    prediction: Centers,
    trace: Option<ChainTrace>,
    cumulative_loss: f64,
}

impl OnlineClusterer {
    /// Draws `c_hat_1` from the prior.
    pub fn new(cfg: PacboConfig) -> Result<Self> {
        let prior = PriorSpec::from_config(&cfg)?;
        Self::with_prior(cfg, prior)
    }

    /// Like [`new`](Self::new) but reuses a prior built from the same config,
    /// which avoids re-estimating the Student truncation constant.
    pub fn with_prior(cfg: PacboConfig, prior: PriorSpec) -> Result<Self> {
        cfg.validate()?;
        if prior.p() != cfg.p || prior.dim() != cfg.d || prior.kind() != cfg.prior {
            return Err(invalid("prior", "does not match the configuration"));
        }
        let lambda0 = cfg.lambda.lambda_at(cfg.d, 0)?;
        let history = StreamHistory::new(cfg.d, lambda0);
        let jitter = 1e-6 * if cfg.radius.is_finite() { cfg.radius.max(1.0) } else { 1.0 };
        let cache = KMeansCache::new(cfg.kmeans, cfg.seed, jitter);
        let prediction = prior.sample(&mut purpose_rng(cfg.seed, Purpose::PriorDraw, 0));
        Ok(OnlineClusterer { cfg, prior, history, cache, prediction, trace: None, cumulative_loss: 0.0 })
    }

    pub fn config(&self) -> &PacboConfig {
        &self.cfg
    }

    pub fn prior(&self) -> &PriorSpec {
        &self.prior
    }

    /// `c_hat_{t+1}` after `t` observations.
    pub fn prediction(&self) -> &Centers {
        &self.prediction
    }

    /// Chain that produced the current prediction, when traces are recorded.
    pub fn prediction_trace(&self) -> Option<&ChainTrace> {
        self.trace.as_ref()
    }

    pub fn history(&self) -> &StreamHistory {
        &self.history
    }

    /// Number of observations seen so far.
    pub fn t(&self) -> usize {
        self.history.len()
    }

    /// Reveals `x_t`, records the loss of `c_hat_t` and samples `c_hat_{t+1}`.
    pub fn observe(&mut self, x: &[f64]) -> Result<StepRecord> {
        let d = self.cfg.d;
        if x.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: x.len() });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("observation"));
        }
        let t = self.history.len() + 1;
        let lambda_t = self.cfg.lambda.lambda_at(d, t)?;
        let loss = loss_flat(self.prediction.as_flat(), d, x);
        self.history.push(x, loss, lambda_t)?;
        self.cumulative_loss += loss;

        let next = self.sample_next(t)?;
        let centers = core::mem::replace(&mut self.prediction, next.0);
        let trace = core::mem::replace(&mut self.trace, next.1);
        Ok(StepRecord {
            t,
            k: centers.k(),
            centers,
            loss,
            cumulative_loss: self.cumulative_loss,
            trace,
            wall_time_secs: None,
        })
    }

    fn sample_next(&mut self, t: usize) -> Result<(Centers, Option<ChainTrace>)> {
        let d = self.cfg.d;
        let OnlineClusterer { cfg, prior, history, cache, prediction, .. } = self;
        let target = TargetDensity::new(history.current_lambda(), history.context(), prior)?;
        let kernel = Kernel::new(target, tau_schedule(cfg.p, t + 1))?;
        cache.sync(t);
        let mut locations = cache.bind(history.data(), d);
        let init = kernel.warm_start(prediction.k(), &mut locations)?;
        let mut rng = purpose_rng(cfg.seed, Purpose::Chain, t as u64);
        let (state, trace) = kernel.run_chain(init, cfg.chain_length, &mut locations, &mut rng, cfg.record_trace)?;
        Ok((state.centers, cfg.record_trace.then_some(trace)))
    }

    /// Closes the run: `c_hat_{T+1}` and its trace.
    pub fn finish(self, steps: Vec<StepRecord>) -> RunRecord {
        RunRecord { steps, final_centers: self.prediction, final_trace: self.trace }
    }
}

/// Runs the whole stream, given as a flat row-major array with `cfg.d` columns.
pub fn run_stream(data: &[f64], cfg: &PacboConfig) -> Result<RunRecord> {
    if cfg.d == 0 || !data.len().is_multiple_of(cfg.d) {
        return Err(Error::DimensionMismatch { expected: cfg.d, got: data.len() });
    }
    let mut clusterer = OnlineClusterer::new(cfg.clone())?;
    let mut steps = Vec::with_capacity(data.len() / cfg.d);
    for x in data.chunks_exact(cfg.d) {
        steps.push(clusterer.observe(x)?);
    }
    Ok(clusterer.finish(steps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::LambdaSchedule;
    use alloc::vec;

    fn small_cfg() -> PacboConfig {
        PacboConfig { d: 1, p: 4, radius: 3.0, chain_length: 40, seed: 11, ..PacboConfig::default() }
    }

    fn stream() -> Vec<f64> {
        vec![-2.0, -1.9, 2.1, 2.0, -2.1, 1.9, 0.1, -2.0, 2.0, 0.0]
    }

    #[test]
    fn empty_stream_gives_prior_draw() {
        let cfg = small_cfg();
        let rec = run_stream(&[], &cfg).unwrap();
        assert!(rec.steps.is_empty());
        let prior = PriorSpec::from_config(&cfg).unwrap();
        let direct = prior.sample(&mut purpose_rng(cfg.seed, Purpose::PriorDraw, 0));
        assert_eq!(rec.final_centers, direct);
    }

    #[test]
    fn deterministic_and_consistent() {
        let cfg = PacboConfig { record_trace: true, ..small_cfg() };
        let a = run_stream(&stream(), &cfg).unwrap();
        let b = run_stream(&stream(), &cfg).unwrap();
        assert_eq!(a, b);
        let mut cum = 0.0;
        for (i, s) in a.steps.iter().enumerate() {
            assert_eq!(s.t, i + 1);
            assert!(s.k >= 1 && s.k <= cfg.p);
            assert_eq!(s.k, s.centers.k());
            let x = &stream()[i..i + 1];
            assert_eq!(s.loss, crate::loss::instantaneous_loss(&s.centers, x).unwrap());
            cum += s.loss;
            assert_eq!(s.cumulative_loss, cum);
            assert_eq!(s.trace.is_some(), i > 0);
            if let Some(tr) = &s.trace {
                assert_eq!(tr.len(), cfg.chain_length);
                assert_eq!(tr.entries.last().unwrap().k_current, s.k);
            }
        }
        assert_eq!(a.final_trace.as_ref().unwrap().entries.last().unwrap().k_current, a.final_centers.k());
    }

    #[test]
    fn no_lookahead() {
        let cfg = small_cfg();
        let full = run_stream(&stream(), &cfg).unwrap();
        let mut altered = stream();
        altered[7] = 50.0;
        let other = run_stream(&altered, &cfg).unwrap();
        // c_hat_8 is fixed before x_8 arrives; only its loss sees the change
        assert_eq!(full.steps[..7], other.steps[..7]);
        assert_eq!(full.steps[7].centers, other.steps[7].centers);
        assert_ne!(full.steps[7].loss, other.steps[7].loss);
        assert_ne!(full.steps[8].centers, other.steps[8].centers);
    }

    #[test]
    fn incremental_matches_batch() {
        let cfg = small_cfg();
        let batch = run_stream(&stream(), &cfg).unwrap();
        let mut c = OnlineClusterer::new(cfg).unwrap();
        for (i, x) in stream().chunks(1).enumerate() {
            assert_eq!(c.prediction(), &batch.steps[i].centers);
            c.observe(x).unwrap();
        }
        assert_eq!(c.prediction(), &batch.final_centers);
    }

    #[test]
    fn fixed_schedule_reproduces_custom_constant() {
        let fixed = PacboConfig { lambda: LambdaSchedule::Fixed { value: 0.7 }, ..small_cfg() };
        let custom = PacboConfig { lambda: LambdaSchedule::Custom { values: vec![0.7; 20] }, ..small_cfg() };
        assert_eq!(run_stream(&stream(), &fixed).unwrap(), run_stream(&stream(), &custom).unwrap());
    }

    #[test]
    fn rejects_bad_input() {
        let cfg = small_cfg();
        let mut c = OnlineClusterer::new(cfg.clone()).unwrap();
        assert!(matches!(c.observe(&[1.0, 2.0]), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(c.observe(&[f64::NAN]), Err(Error::NonFinite(_))));
        let cfg2 = PacboConfig { d: 2, ..cfg };
        assert!(run_stream(&[1.0, 2.0, 3.0], &cfg2).is_err());
    }

    #[test]
    fn corollary2_errors_past_horizon() {
        let cfg = PacboConfig { lambda: LambdaSchedule::Corollary2 { radius: 3.0, horizon: 3 }, ..small_cfg() };
        assert!(run_stream(&stream()[..3], &cfg).is_ok());
        assert!(matches!(run_stream(&stream()[..4], &cfg), Err(Error::BeyondHorizon { .. })));
    }
}
