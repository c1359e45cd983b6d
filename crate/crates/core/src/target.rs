//! The Gibbs quasi-posterior `rho_{t+1}(c) ~ exp(-lambda_t S_t(c)) pi(c)` and
//! a brute-force grid normalization of it for toy instances.

use alloc::vec::Vec;

use crate::centers::Centers;
use crate::error::{invalid, Error, Result};
use crate::loss::ScoreContext;
use crate::math::{exp, log};
use crate::prior::PriorSpec;

/// Unnormalized log-density of the quasi-posterior, always handled in log space.
#[derive(Debug, Clone, Copy)]
pub struct TargetDensity<'a> {
    lambda: f64,
    ctx: ScoreContext<'a>,
    prior: &'a PriorSpec,
}

impl<'a> TargetDensity<'a> {
    /// `lambda = 0` gives the prior itself.
    pub fn new(lambda: f64, ctx: ScoreContext<'a>, prior: &'a PriorSpec) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(invalid("lambda", "must be finite and non-negative"));
        }
        if ctx.dim() != prior.dim() {
            return Err(Error::DimensionMismatch { expected: prior.dim(), got: ctx.dim() });
        }
        Ok(TargetDensity { lambda, ctx, prior })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn context(&self) -> &ScoreContext<'a> {
        &self.ctx
    }

    pub fn prior(&self) -> &'a PriorSpec {
        self.prior
    }

    /// `-lambda S_t(c) + log pi(c)`; `-inf` outside the prior support.
    pub fn log_target(&self, c: &Centers) -> Result<f64> {
        if c.dim() != self.prior.dim() {
            return Err(Error::DimensionMismatch { expected: self.prior.dim(), got: c.dim() });
        }
        if c.k() > self.prior.p() {
            return Err(Error::ClusterCountOutOfRange { k: c.k(), p: self.prior.p() });
        }
        Ok(self.log_target_flat(c.as_flat()))
    }

    pub(crate) fn log_target_flat(&self, coords: &[f64]) -> f64 {
        let lp = self.prior.log_prior_flat(coords);
        if lp == f64::NEG_INFINITY {
            return lp;
        }
        if self.lambda == 0.0 {
            return lp;
        }
        lp - self.lambda * self.ctx.score_flat(coords)
    }
}

/// Cells per coordinate of the midpoint grid over `[-2R, 2R]^{dk}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpec {
    pub cells_per_dim: usize,
}

pub const GRID_CELL_LIMIT: u128 = 10_000_000;

/// Riemann-sum normalization of a target on `d <= 2`, `p <= 3`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridOracle {
    log_slice_mass: Vec<f64>,
    log_normalizer: f64,
    cells_per_dim: usize,
    spacing: f64,
}

impl GridOracle {
    /// Posterior probability of each `k = 1..p`.
    pub fn marginal(&self) -> Vec<f64> {
        self.log_slice_mass.iter().map(|m| exp(m - self.log_normalizer)).collect()
    }

    /// Unnormalized log mass of each slice `R^{dk}`.
    pub fn log_slice_mass(&self) -> &[f64] {
        &self.log_slice_mass
    }

    pub fn log_normalizer(&self) -> f64 {
        self.log_normalizer
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn cells_per_dim(&self) -> usize {
        self.cells_per_dim
    }

    /// Normalized log-density of the target at `c`.
    pub fn log_density(&self, target: &TargetDensity<'_>, c: &Centers) -> Result<f64> {
        Ok(target.log_target(c)? - self.log_normalizer)
    }
}

struct StreamingLse {
    max: f64,
    sum: f64,
}

impl StreamingLse {
    fn new() -> Self {
        StreamingLse { max: f64::NEG_INFINITY, sum: 0.0 }
    }

    fn push(&mut self, v: f64) {
        if v == f64::NEG_INFINITY {
            return;
        }
        if v <= self.max {
            self.sum += exp(v - self.max);
        } else {
            self.sum = self.sum * exp(self.max - v) + 1.0;
            self.max = v;
        }
    }

    fn value(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.max + log(self.sum)
        }
    }
}

pub fn grid_oracle(target: &TargetDensity<'_>, grid: GridSpec) -> Result<GridOracle> {
    let prior = target.prior();
    let (d, p) = (prior.dim(), prior.p());
    if d > 2 || p > 3 {
        return Err(invalid("target", "grid oracle supports d <= 2 and p <= 3 only"));
    }
    if !prior.radius().is_finite() {
        return Err(invalid("radius", "grid oracle needs a bounded support"));
    }
    if grid.cells_per_dim == 0 {
        return Err(invalid("cells_per_dim", "must be positive"));
    }
    let n = grid.cells_per_dim as u128;
    let cells: u128 = (1..=p).map(|k| n.pow((d * k) as u32)).sum();
    if cells > GRID_CELL_LIMIT {
        return Err(Error::GridTooLarge { cells, limit: GRID_CELL_LIMIT });
    }
    let half = 2.0 * prior.radius();
    let spacing = 2.0 * half / grid.cells_per_dim as f64;
    let mids: Vec<f64> = (0..grid.cells_per_dim).map(|i| -half + (i as f64 + 0.5) * spacing).collect();
    let mut log_slice_mass = Vec::with_capacity(p);
    for k in 1..=p {
        let dims = d * k;
        let mut index = alloc::vec![0usize; dims];
        let mut coords: Vec<f64> = alloc::vec![mids[0]; dims];
        let mut lse = StreamingLse::new();
        'cells: loop {
            lse.push(target.log_target_flat(&coords));
            for axis in 0..dims {
                index[axis] += 1;
                if index[axis] < grid.cells_per_dim {
                    coords[axis] = mids[index[axis]];
                    continue 'cells;
                }
                index[axis] = 0;
                coords[axis] = mids[0];
            }
            break;
        }
        log_slice_mass.push(lse.value() + dims as f64 * log(spacing));
    }
    let log_normalizer = crate::math::log_sum_exp(log_slice_mass.iter().copied());
    if !log_normalizer.is_finite() {
        return Err(Error::Validity("target has no mass on the grid"));
    }
    Ok(GridOracle { log_slice_mass, log_normalizer, cells_per_dim: grid.cells_per_dim, spacing })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::fabs;

    fn c1(v: &[f64]) -> Centers {
        Centers::new(1, v.to_vec()).unwrap()
    }

    #[test]
    fn empty_history_gives_prior() {
        let prior = PriorSpec::uniform(2, 1, 1.0, 0.3).unwrap();
        let tgt = TargetDensity::new(0.8, ScoreContext::empty(1), &prior).unwrap();
        for c in [c1(&[0.5]), c1(&[-1.0, 1.9])] {
            assert_eq!(tgt.log_target(&c).unwrap(), prior.log_prior(&c).unwrap());
        }
        assert_eq!(tgt.log_target(&c1(&[2.5])).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn vanishing_temperature_recovers_prior() {
        let prior = PriorSpec::uniform(2, 1, 3.0, 0.0).unwrap();
        let ctx = ScoreContext::new(1, &[1.0, 2.0], &[0.5, 0.1], &[1.0, 0.5]).unwrap();
        let c = c1(&[0.3, -1.0]);
        let lp = prior.log_prior(&c).unwrap();
        let mut prev = f64::INFINITY;
        for lam in [1.0, 1e-2, 1e-4, 1e-8, 0.0] {
            let gap = fabs(TargetDensity::new(lam, ctx, &prior).unwrap().log_target(&c).unwrap() - lp);
            assert!(gap <= prev);
            prev = gap;
        }
        assert_eq!(prev, 0.0);
    }

    #[test]
    fn differences_depend_on_score_and_prior_differences() {
        let prior = PriorSpec::uniform(3, 1, 3.0, 0.4).unwrap();
        let a = c1(&[0.0]);
        let b = c1(&[1.0, -2.0]);
        // an extra observation at 0.5 has the same loss (0.25) under both a and b:
        // appending it shifts both scores by the same constant
        let base = ScoreContext::new(1, &[1.0, -2.0], &[2.0, 1.0], &[1.0, 0.7]).unwrap();
        let shifted = ScoreContext::new(1, &[1.0, -2.0, 0.5], &[2.0, 1.0, 3.0], &[1.0, 0.7, 0.5]).unwrap();
        let diff = |ctx| {
            let t = TargetDensity::new(0.4, ctx, &prior).unwrap();
            t.log_target(&a).unwrap() - t.log_target(&b).unwrap()
        };
        let sa = crate::loss::score(&a, &shifted).unwrap();
        let sb = crate::loss::score(&b, &shifted).unwrap();
        let lp = prior.log_prior(&a).unwrap() - prior.log_prior(&b).unwrap();
        assert!(fabs(diff(shifted) - (-0.4 * (sa - sb) + lp)) < 1e-12);
        assert!(fabs(diff(base) - diff(shifted)) < 1e-12);
    }

    #[test]
    fn grid_prior_marginals() {
        let prior = PriorSpec::uniform(2, 1, 1.0, 0.0).unwrap();
        let tgt = TargetDensity::new(1.0, ScoreContext::empty(1), &prior).unwrap();
        let g = grid_oracle(&tgt, GridSpec { cells_per_dim: 200 }).unwrap();
        let m = g.marginal();
        assert!(fabs(m[0] - 0.5) < 1e-9 && fabs(m[1] - 0.5) < 1e-9);

        let prior = PriorSpec::uniform(2, 1, 1.0, core::f64::consts::LN_2).unwrap();
        let tgt = TargetDensity::new(1.0, ScoreContext::empty(1), &prior).unwrap();
        let m = grid_oracle(&tgt, GridSpec { cells_per_dim: 200 }).unwrap().marginal();
        assert!(fabs(m[0] - 2.0 / 3.0) < 1e-9 && fabs(m[1] - 1.0 / 3.0) < 1e-9);
    }

    #[test]
    fn grid_refinement_converges() {
        let prior = PriorSpec::uniform(3, 1, 1.0, 0.2).unwrap();
        let data = [-0.6, 0.2, 0.7];
        let ctx = ScoreContext::new(1, &data, &[0.3, 0.1, 0.4], &[1.0, 0.8, 0.6]).unwrap();
        let tgt = TargetDensity::new(1.5, ctx, &prior).unwrap();
        let coarse = grid_oracle(&tgt, GridSpec { cells_per_dim: 100 }).unwrap().marginal();
        let fine = grid_oracle(&tgt, GridSpec { cells_per_dim: 200 }).unwrap().marginal();
        for (a, b) in coarse.iter().zip(&fine) {
            assert!(fabs(a - b) < 1e-3, "{coarse:?} {fine:?}");
        }
        assert!(fabs(fine.iter().sum::<f64>() - 1.0) < 1e-9);
    }

    #[test]
    fn grid_limits() {
        let prior = PriorSpec::uniform(5, 1, 1.0, 0.0).unwrap();
        let tgt = TargetDensity::new(1.0, ScoreContext::empty(1), &prior).unwrap();
        assert!(grid_oracle(&tgt, GridSpec { cells_per_dim: 10 }).is_err());
        let prior = PriorSpec::uniform(3, 2, 1.0, 0.0).unwrap();
        let tgt = TargetDensity::new(1.0, ScoreContext::empty(2), &prior).unwrap();
        assert!(matches!(grid_oracle(&tgt, GridSpec { cells_per_dim: 20 }), Err(Error::GridTooLarge { .. })));
    }
}
