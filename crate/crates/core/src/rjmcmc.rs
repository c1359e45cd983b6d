//! Reversible-jump Metropolis-Hastings kernel over `U_k R^{dk}`.
//!
//! From `(k, c)` the kernel proposes `k'` in `{k-1, k, k+1}` with probability
//! 1/3 each (out-of-range moves become `k' = k`), draws `v ~ rho_{k'}` around
//! the k-means locations for `k'` and swaps it in as `c' = v`. The swap has
//! unit Jacobian, so
//!
//! `log alpha = min(0, log rho_hat(c') - log rho_hat(c) + log rho_k(c) - log rho_{k'}(c'))`
//!
//! where the `q` ratio cancels because `q(k, k') = q(k', k) = 1/3` for every
//! feasible `k != k'`.

use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::centers::Centers;
use crate::error::{invalid, Error, Result};
use crate::math::{exp, log, sq_norm, sqrt};
use crate::proposal::LocationSource;
use crate::student::{product_log_density_flat, student_sample, ProposalParams};
use crate::target::TargetDensity;

/// Dimension proposal: `k - 1`, `k`, `k + 1` with probability 1/3 each; an
/// infeasible neighbour is replaced by `k`.
pub fn propose_dimension<R: Rng + ?Sized>(k: usize, p: usize, rng: &mut R) -> usize {
    match rng.random_range(0..3u8) {
        0 if k > 1 => k - 1,
        2 if k < p => k + 1,
        _ => k,
    }
}

/// Current state of the chain with its cached log target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainState {
    pub k: usize,
    pub centers: Centers,
    pub log_target: f64,
    /// Iterations performed so far.
    pub n: usize,
}

impl ChainState {
    /// Fails if `centers` is outside the target's support.
    pub fn new(centers: Centers, target: &TargetDensity<'_>) -> Result<Self> {
        let log_target = target.log_target(&centers)?;
        if log_target == f64::NEG_INFINITY {
            return Err(Error::Validity("initial state outside the support of the target"));
        }
        Ok(ChainState { k: centers.k(), centers, log_target, n: 0 })
    }
}

/// One chain iteration. `k_current` is the dimension after the iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub n: usize,
    pub k_current: usize,
    pub k_proposed: usize,
    pub alpha: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ChainTrace {
    pub entries: Vec<TraceEntry>,
}

impl ChainTrace {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Empirical distribution of `k_current` over entries after `burn_in`, indexed by `k - 1`.
    pub fn k_marginal(&self, p: usize, burn_in: usize) -> Vec<f64> {
        let mut counts = alloc::vec![0usize; p];
        let kept = &self.entries[burn_in.min(self.entries.len())..];
        for e in kept {
            counts[e.k_current - 1] += 1;
        }
        let total = kept.len().max(1) as f64;
        counts.into_iter().map(|c| c as f64 / total).collect()
    }

    pub fn acceptance_rate(&self) -> f64 {
        let accepted = self.entries.iter().filter(|e| e.accepted).count();
        accepted as f64 / self.entries.len().max(1) as f64
    }
}

/// `log alpha` for moving from `current` to `proposal`. Both proposal
/// densities are evaluated at the same scale `tau`, around the locations in
/// `current_params` (dimension `k`) and `proposal_params` (dimension `k'`).
pub fn acceptance_log_prob(
    current: &ChainState,
    proposal: &Centers,
    target: &TargetDensity<'_>,
    current_params: &ProposalParams,
    proposal_params: &ProposalParams,
) -> Result<f64> {
    if current.k != current_params.k() || proposal.k() != proposal_params.k() {
        return Err(invalid("params", "proposal locations do not match the state dimensions"));
    }
    let proposal_log_target = target.log_target(proposal)?;
    let reverse = crate::student::student_log_density(&current.centers, current_params)?;
    let forward = crate::student::student_log_density(proposal, proposal_params)?;
    Ok(log_alpha(current.log_target, proposal_log_target, reverse, forward))
}

#[inline]
fn log_alpha(current_log_target: f64, proposal_log_target: f64, reverse: f64, forward: f64) -> f64 {
    assert!(current_log_target > f64::NEG_INFINITY, "chain left the support of the target");
    if proposal_log_target == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let ratio = (proposal_log_target - current_log_target) + (reverse - forward);
    if ratio.is_nan() {
        return f64::NEG_INFINITY;
    }
    ratio.min(0.0)
}

/// Target plus the proposal scale for one time step.
#[derive(Debug, Clone, Copy)]
pub struct Kernel<'a> {
    pub target: TargetDensity<'a>,
    pub tau: f64,
}

impl<'a> Kernel<'a> {
    pub fn new(target: TargetDensity<'a>, tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(invalid("tau", "must be positive"));
        }
        Ok(Kernel { target, tau })
    }

    /// One iteration; a rejected proposal leaves `state` untouched apart from `n`.
    pub fn step<L: LocationSource + ?Sized, R: Rng + ?Sized>(
        &self,
        state: &mut ChainState,
        locations: &mut L,
        rng: &mut R,
    ) -> Result<TraceEntry> {
        let p = self.target.prior().p();
        let k_proposed = propose_dimension(state.k, p, rng);
        locations.prepare(state.k)?;
        locations.prepare(k_proposed)?;
        let proposal_params = ProposalParams { locations: locations.locations(k_proposed).clone(), tau: self.tau };
        let proposal = student_sample(&proposal_params, rng);
        let d = proposal.dim();
        let proposal_log_target = self.target.log_target_flat(proposal.as_flat());
        let reverse = product_log_density_flat(state.centers.as_flat(), locations.locations(state.k).as_flat(), d, self.tau);
        let forward = product_log_density_flat(proposal.as_flat(), proposal_params.locations.as_flat(), d, self.tau);
        let log_a = log_alpha(state.log_target, proposal_log_target, reverse, forward);
        let u: f64 = rng.random();
        let alpha = exp(log_a);
        let accepted = u < alpha;
        if accepted {
            state.k = k_proposed;
            state.centers = proposal;
            state.log_target = proposal_log_target;
        }
        state.n += 1;
        Ok(TraceEntry { n: state.n, k_current: state.k, k_proposed, alpha, accepted })
    }

    /// Runs `iterations` steps; the trace is kept only when `record` is set.
    pub fn run_chain<L: LocationSource + ?Sized, R: Rng + ?Sized>(
        &self,
        mut state: ChainState,
        iterations: usize,
        locations: &mut L,
        rng: &mut R,
        record: bool,
    ) -> Result<(ChainState, ChainTrace)> {
        if iterations == 0 {
            return Err(invalid("iterations", "must be at least 1"));
        }
        let mut trace = ChainTrace { entries: Vec::with_capacity(if record { iterations } else { 0 }) };
        for _ in 0..iterations {
            let entry = self.step(&mut state, locations, rng)?;
            if record {
                trace.entries.push(entry);
            }
        }
        Ok((state, trace))
    }

    /// Initial state at the k-means locations for `k0`, pulled radially inside
    /// the ball of radius `2R` when needed.
    pub fn warm_start<L: LocationSource + ?Sized>(&self, k0: usize, locations: &mut L) -> Result<ChainState> {
        let prior = self.target.prior();
        let k0 = k0.clamp(1, prior.p());
        locations.prepare(k0)?;
        let mut centers = locations.locations(k0).clone();
        let radius = prior.radius();
        if radius.is_finite() {
            let limit = 2.0 * radius - 1e-9 * radius;
            let d = centers.dim();
            for block in centers.as_flat_mut().chunks_exact_mut(d) {
                let norm = sqrt(sq_norm(block));
                if norm > limit {
                    let s = limit / norm;
                    block.iter_mut().for_each(|v| *v *= s);
                }
            }
        }
        ChainState::new(centers, &self.target)
    }
}

/// `log q(k, k')` of the dimension proposal, `-inf` when `k'` is unreachable.
pub fn log_dimension_proposal(k: usize, k_next: usize, p: usize) -> f64 {
    let third = log(1.0 / 3.0);
    if k_next == k {
        let blocked = (k == 1) as usize + (k == p) as usize;
        log((1 + blocked) as f64 / 3.0)
    } else if (k_next + 1 == k && k > 1) || (k_next == k + 1 && k < p) {
        third
    } else {
        f64::NEG_INFINITY
    }
}
