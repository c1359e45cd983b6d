//! Clustering loss and the cumulative score `S_t`.
//!
//! `S_t(c) = sum_{s<=t} [ l(c, x_s) + (lambda_{s-1} / 2) (l(c, x_s) - l(c_hat_s, x_s))^2 ]`
//! where `l(c, x)` is the squared distance from `x` to its nearest center.
//! The score depends on past predictions only through the scalars
//! `l(c_hat_s, x_s)`, so the history stores those rather than the centers.

use alloc::vec::Vec;

use crate::centers::Centers;
use crate::error::{Error, Result};
use crate::math::sq_dist;

/// `min_j |c_j - x|^2`.
pub fn instantaneous_loss(c: &Centers, x: &[f64]) -> Result<f64> {
    if c.dim() != x.len() {
        return Err(Error::DimensionMismatch { expected: c.dim(), got: x.len() });
    }
    Ok(loss_flat(c.as_flat(), c.dim(), x))
}

#[inline]
pub(crate) fn loss_flat(coords: &[f64], d: usize, x: &[f64]) -> f64 {
    coords.chunks_exact(d).map(|p| sq_dist(p, x)).fold(f64::INFINITY, f64::min)
}

#[inline]
fn score_term(loss: f64, output_loss: f64, lambda_prev: f64) -> f64 {
    let diff = loss - output_loss;
    loss + 0.5 * lambda_prev * diff * diff
}

/// Everything needed to evaluate `S_t` at an arbitrary center vector.
#[derive(Debug, Clone, Copy)]
pub struct ScoreContext<'a> {
    d: usize,
    data: &'a [f64],
    output_losses: &'a [f64],
    lambdas: &'a [f64],
}

impl<'a> ScoreContext<'a> {
    /// `data` holds `x_1..x_t` flat, `output_losses[s-1] = l(c_hat_s, x_s)` and
    /// `lambdas[s-1] = lambda_{s-1}`; `t` is `output_losses.len()`.
    pub fn new(d: usize, data: &'a [f64], output_losses: &'a [f64], lambdas: &'a [f64]) -> Result<Self> {
        let t = output_losses.len();
        if d == 0 {
            return Err(crate::error::invalid("d", "dimension must be positive"));
        }
        if data.len() != t * d {
            return Err(Error::LengthMismatch { left: data.len(), right: t * d });
        }
        if lambdas.len() < t {
            return Err(Error::LengthMismatch { left: lambdas.len(), right: t });
        }
        Ok(ScoreContext { d, data, output_losses, lambdas: &lambdas[..t] })
    }

    /// The `t = 0` context, for which `S_0 = 0`.
    pub fn empty(d: usize) -> Self {
        ScoreContext { d, data: &[], output_losses: &[], lambdas: &[] }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.output_losses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.output_losses.is_empty()
    }

    pub fn data(&self) -> &'a [f64] {
        self.data
    }

    pub fn observation(&self, s: usize) -> &'a [f64] {
        &self.data[s * self.d..(s + 1) * self.d]
    }

    pub(crate) fn score_flat(&self, coords: &[f64]) -> f64 {
        let mut total = 0.0;
        for ((x, &out), &lam) in self.data.chunks_exact(self.d).zip(self.output_losses).zip(self.lambdas) {
            total += score_term(loss_flat(coords, self.d, x), out, lam);
        }
        total
    }
}

/// Batch evaluation of `S_t(c)`.
pub fn score(c: &Centers, ctx: &ScoreContext<'_>) -> Result<f64> {
    if c.dim() != ctx.d {
        return Err(Error::DimensionMismatch { expected: ctx.d, got: c.dim() });
    }
    Ok(ctx.score_flat(c.as_flat()))
}

/// Running value of `S_t(c)` for one fixed `c`, extended one step at a time.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreAccumulator {
    centers: Centers,
    value: f64,
    steps: usize,
}

impl ScoreAccumulator {
    pub fn new(centers: Centers) -> Self {
        ScoreAccumulator { centers, value: 0.0, steps: 0 }
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn centers(&self) -> &Centers {
        &self.centers
    }

    /// Appends `x_t` with `l(c_hat_t, x_t)` and `lambda_{t-1}`.
    pub fn push(&mut self, x: &[f64], output_loss: f64, lambda_prev: f64) -> Result<f64> {
        let loss = instantaneous_loss(&self.centers, x)?;
        self.value += score_term(loss, output_loss, lambda_prev);
        self.steps += 1;
        Ok(self.value)
    }

    /// Brings the cache up to date with a longer context over the same prefix.
    pub fn extend(&mut self, ctx: &ScoreContext<'_>) -> Result<f64> {
        if ctx.d != self.centers.dim() {
            return Err(Error::DimensionMismatch { expected: self.centers.dim(), got: ctx.d });
        }
        if ctx.len() < self.steps {
            return Err(Error::CacheMismatch { cached: self.steps, available: ctx.len() });
        }
        for s in self.steps..ctx.len() {
            self.push(ctx.observation(s), ctx.output_losses[s], ctx.lambdas[s])?;
        }
        Ok(self.value)
    }
}

/// Past observations, the losses of past predictions and the inverse
/// temperatures `lambda_0..lambda_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamHistory {
    d: usize,
    data: Vec<f64>,
    output_losses: Vec<f64>,
    lambdas: Vec<f64>,
}

impl StreamHistory {
    pub fn new(d: usize, lambda0: f64) -> Self {
        StreamHistory { d, data: Vec::new(), output_losses: Vec::new(), lambdas: alloc::vec![lambda0] }
    }

    /// Records `x_t`, `l(c_hat_t, x_t)` and `lambda_t`.
    pub fn push(&mut self, x: &[f64], output_loss: f64, lambda_t: f64) -> Result<()> {
        if x.len() != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, got: x.len() });
        }
        self.data.extend_from_slice(x);
        self.output_losses.push(output_loss);
        self.lambdas.push(lambda_t);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Number of observations `t`.
    pub fn len(&self) -> usize {
        self.output_losses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.output_losses.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn output_losses(&self) -> &[f64] {
        &self.output_losses
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    /// `lambda_t` for the current `t`.
    pub fn current_lambda(&self) -> f64 {
        *self.lambdas.last().expect("lambda_0 is always present")
    }

    pub fn context(&self) -> ScoreContext<'_> {
        let t = self.len();
        ScoreContext { d: self.d, data: &self.data, output_losses: &self.output_losses, lambdas: &self.lambdas[..t] }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn c1(points: &[f64]) -> Centers {
        Centers::new(1, points.to_vec()).unwrap()
    }

    #[test]
    fn loss_examples() {
        let c = Centers::new(2, vec![0.0, 0.0]).unwrap();
        assert_eq!(instantaneous_loss(&c, &[3.0, 4.0]).unwrap(), 25.0);
        let c = Centers::new(2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(instantaneous_loss(&c, &[0.0, 1.0]).unwrap(), 0.0);
        // brute force: (1+1)^2, (1-2)^2, (1-5)^2 -> min 1
        let brute = [-1.0f64, 2.0, 5.0].iter().map(|c| (1.0 - c) * (1.0 - c)).fold(f64::INFINITY, f64::min);
        assert_eq!(brute, 1.0);
        assert_eq!(instantaneous_loss(&c1(&[-1.0, 2.0, 5.0]), &[1.0]).unwrap(), brute);
    }

    #[test]
    fn loss_dimension_mismatch() {
        assert!(matches!(
            instantaneous_loss(&c1(&[0.0]), &[1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn score_empty_is_zero() {
        assert_eq!(score(&c1(&[3.0]), &ScoreContext::empty(1)).unwrap(), 0.0);
    }

    #[test]
    fn score_hand_example() {
        // x_1 = 1, c_hat_1 = (1) so l(c_hat_1, x_1) = 0, lambda_0 = 1, c = (0)
        let ctx = ScoreContext::new(1, &[1.0], &[0.0], &[1.0]).unwrap();
        assert_eq!(score(&c1(&[0.0]), &ctx).unwrap(), 1.5);
    }

    #[test]
    fn score_at_predictions_is_cumulative_loss() {
        let data = [0.5, 1.5, -0.25];
        let c = c1(&[0.0]);
        let losses: Vec<f64> = data.iter().map(|x| x * x).collect();
        let ctx = ScoreContext::new(1, &data, &losses, &[0.7, 0.3, 0.2]).unwrap();
        let expected: f64 = losses.iter().sum();
        assert!((score(&c, &ctx).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn accumulator_base_cases() {
        let mut acc = ScoreAccumulator::new(c1(&[0.0]));
        assert_eq!(acc.push(&[1.0], 0.0, 1.0).unwrap(), 1.5);
        let mut acc = ScoreAccumulator::new(c1(&[0.0]));
        acc.push(&[1.0], 0.0, 1.0).unwrap();
        let before = acc.value();
        acc.push(&[2.0], 100.0, 0.0).unwrap();
        assert_eq!(acc.value() - before, 4.0);
    }

    #[test]
    fn accumulator_rejects_shorter_context() {
        let mut acc = ScoreAccumulator::new(c1(&[0.0]));
        acc.push(&[1.0], 0.0, 1.0).unwrap();
        acc.push(&[1.0], 0.0, 1.0).unwrap();
        let ctx = ScoreContext::new(1, &[1.0], &[0.0], &[1.0]).unwrap();
        assert!(matches!(acc.extend(&ctx), Err(Error::CacheMismatch { .. })));
    }

    #[test]
    fn context_validates_lengths() {
        assert!(ScoreContext::new(2, &[1.0], &[0.0], &[1.0]).is_err());
        assert!(ScoreContext::new(1, &[1.0, 2.0], &[0.0, 0.0], &[1.0]).is_err());
    }

    #[test]
    fn history_context_uses_lambdas_before_t() {
        let mut h = StreamHistory::new(1, 1.0);
        h.push(&[1.0], 0.0, 0.5).unwrap();
        assert_eq!(h.current_lambda(), 0.5);
        let ctx = h.context();
        assert_eq!(ctx.len(), 1);
        // uses lambda_0 = 1, not lambda_1
        assert_eq!(score(&c1(&[0.0]), &ctx).unwrap(), 1.5);
    }

    proptest! {
        #[test]
        fn loss_permutation_invariant(pts in prop::collection::vec(-10.0f64..10.0, 2..12), x in -10.0f64..10.0, rot in 0usize..12) {
            let mut rotated = pts.clone();
            let r = rot % pts.len();
            rotated.rotate_left(r);
            let a = instantaneous_loss(&c1(&pts), &[x]).unwrap();
            let b = instantaneous_loss(&c1(&rotated), &[x]).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn extra_center_never_hurts(pts in prop::collection::vec(-10.0f64..10.0, 2..8), extra in prop::collection::vec(-10.0f64..10.0, 2), x in prop::collection::vec(-10.0f64..10.0, 2)) {
            let d = 2;
            let base = Centers::new(d, pts[..pts.len() / 2 * 2].to_vec());
            prop_assume!(base.is_ok());
            let base = base.unwrap();
            let mut more = base.as_flat().to_vec();
            more.extend_from_slice(&extra);
            let more = Centers::new(d, more).unwrap();
            prop_assert!(instantaneous_loss(&more, &x).unwrap() <= instantaneous_loss(&base, &x).unwrap());
        }

        #[test]
        fn score_dominates_cumulative_loss(data in prop::collection::vec(-5.0f64..5.0, 1..20), c in -5.0f64..5.0, lam in 0.0f64..3.0) {
            let outs: Vec<f64> = data.iter().map(|x| (x - 1.0) * (x - 1.0)).collect();
            let lambdas = vec![lam; data.len()];
            let ctx = ScoreContext::new(1, &data, &outs, &lambdas).unwrap();
            let cc = c1(&[c]);
            let plain: f64 = data.iter().map(|x| (x - c) * (x - c)).sum();
            prop_assert!(score(&cc, &ctx).unwrap() >= plain - 1e-12 * plain.abs());
        }
    }
}
