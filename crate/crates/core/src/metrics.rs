//! Regret accounting: oracle cumulative loss, expected cumulative loss and
//! correct-k counts.
//!
//! The oracle loss is an infimum over all `k`-center vectors in the ball of
//! radius `R`, which is NP-hard to compute. [`ocl`] returns the best value
//! found by restarted k-means with clipped centers, so it is an upper bound on
//! the true oracle loss and the reported regret is a lower bound.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::config::KMeansConfig;
use crate::error::{invalid, Error, Result};
use crate::kmeans::{kmeans_ladder, within_loss};
use crate::math::{sq_norm, sqrt};

/// Restarts used for the oracle loss unless a caller overrides them.
pub const OCL_RESTARTS: usize = 50;

pub fn ocl_kmeans_config() -> KMeansConfig {
    KMeansConfig { restarts: OCL_RESTARTS, ..KMeansConfig::default() }
}

/// Scales every center with norm above `radius` back onto the sphere.
pub fn clip_centers(coords: &mut [f64], d: usize, radius: f64) {
    for block in coords.chunks_exact_mut(d) {
        let norm = sqrt(sq_norm(block));
        if norm > radius {
            let s = radius / norm;
            block.iter_mut().for_each(|v| *v *= s);
        }
    }
}

/// Oracle losses for `k = 1..=k_max`; entry `k - 1` is non-increasing in `k`.
pub fn ocl_ladder(data: &[f64], d: usize, k_max: usize, radius: f64, cfg: &KMeansConfig, seed: u64) -> Result<Vec<f64>> {
    if k_max == 0 {
        return Err(invalid("k_star", "must be at least 1"));
    }
    if d == 0 || !data.len().is_multiple_of(d) {
        return Err(Error::DimensionMismatch { expected: d, got: data.len() });
    }
    if data.is_empty() {
        return Ok(alloc::vec![0.0; k_max]);
    }
    let n = data.len() / d;
    let fits = kmeans_ladder(data, d, k_max, cfg, seed, n as u64, 0.0)?;
    let mut best = f64::INFINITY;
    Ok(fits
        .into_iter()
        .map(|fit| {
            let mut coords = fit.centers.into_flat();
            clip_centers(&mut coords, d, radius);
            best = best.min(within_loss(data, d, &coords));
            best
        })
        .collect())
}

/// Approximate `inf_{c in C(k_star, R)} sum_t l(c, x_t)`.
pub fn ocl(data: &[f64], d: usize, k_star: usize, radius: f64, cfg: &KMeansConfig, seed: u64) -> Result<f64> {
    Ok(*ocl_ladder(data, d, k_star, radius, cfg, seed)?.last().expect("k_star >= 1"))
}

/// `#{t : K_t = k*_t}`.
pub fn correct_k_count(ks: &[usize], truth: &[usize]) -> Result<usize> {
    if ks.len() != truth.len() {
        return Err(Error::LengthMismatch { left: ks.len(), right: truth.len() });
    }
    Ok(ks.iter().zip(truth).filter(|(a, b)| a == b).count())
}

/// Per-repetition quantities needed for the regret curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepetitionResult {
    pub cumulative_losses: Vec<f64>,
    pub ks: Vec<usize>,
    /// Oracle loss of the prefix `x_1..x_t` with `k*_t` centers, per `t`.
    pub ocl: Vec<f64>,
}

/// One row of the regret table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegretRow {
    pub t: usize,
    pub ecl: f64,
    pub ocl: f64,
    pub regret: f64,
    pub bound_cor3: f64,
    pub k_true: usize,
    pub k_mode: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretReport {
    pub rows: Vec<RegretRow>,
    pub correct_k: Vec<usize>,
}

impl RegretReport {
    pub fn row(&self, t: usize) -> Option<&RegretRow> {
        self.rows.get(t.wrapping_sub(1))
    }
}

/// Averages cumulative and oracle losses over repetitions. `bound` maps
/// `(t, k*_t)` to the bound value reported next to each row.
pub fn regret_report<F>(reps: &[RepetitionResult], k_true: &[usize], p: usize, mut bound: F) -> Result<RegretReport>
where
    F: FnMut(usize, usize) -> f64,
{
    if reps.is_empty() {
        return Err(invalid("reps", "need at least one repetition"));
    }
    let horizon = k_true.len();
    for r in reps {
        for len in [r.cumulative_losses.len(), r.ks.len(), r.ocl.len()] {
            if len != horizon {
                return Err(Error::LengthMismatch { left: len, right: horizon });
            }
        }
    }
    let m = reps.len() as f64;
    let mut counts = alloc::vec![0usize; p + 1];
    let rows = (0..horizon)
        .map(|i| {
            let ecl = reps.iter().map(|r| r.cumulative_losses[i]).sum::<f64>() / m;
            let ocl = reps.iter().map(|r| r.ocl[i]).sum::<f64>() / m;
            counts.iter_mut().for_each(|c| *c = 0);
            for r in reps {
                counts[r.ks[i].min(p)] += 1;
            }
            let k_mode = (1..=p).max_by_key(|&k| (counts[k], core::cmp::Reverse(k))).unwrap_or(1);
            RegretRow {
                t: i + 1,
                ecl,
                ocl,
                regret: ecl - ocl,
                bound_cor3: bound(i + 1, k_true[i]),
                k_true: k_true[i],
                k_mode,
            }
        })
        .collect();
    let correct_k = reps.iter().map(|r| correct_k_count(&r.ks, k_true)).collect::<Result<_>>()?;
    Ok(RegretReport { rows, correct_k })
}

/// Mean and sample standard deviation; the deviation is `None` for fewer than two values.
pub fn mean_sd(values: &[f64]) -> (f64, Option<f64>) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, None);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, Some(sqrt(var)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::fabs;
    use crate::rng::seeded_rng;
    use alloc::vec;
    use rand::Rng;

    #[test]
    fn perfect_fit_is_zero() {
        let data = [1.0, 1.0, 4.0, 4.0, 1.0, 1.0, -3.0, 2.0, 4.0, 4.0, -3.0, 2.0];
        let v = ocl(&data, 2, 3, 10.0, &ocl_kmeans_config(), 0).unwrap();
        assert!(v < 1e-20);
    }

    #[test]
    fn one_mean_of_plus_minus_one() {
        let data: Vec<f64> = (0..10).map(|i| if i % 2 == 0 { -1.0 } else { 1.0 }).collect();
        let v = ocl(&data, 1, 1, 5.0, &ocl_kmeans_config(), 0).unwrap();
        assert!(fabs(v - 10.0) < 1e-12);
    }

    #[test]
    fn clipping_to_radius() {
        // single point at 3, centers constrained to |c| <= 1: loss (3-1)^2
        let v = ocl(&[3.0], 1, 1, 1.0, &ocl_kmeans_config(), 0).unwrap();
        assert!(fabs(v - 4.0) < 1e-12);
    }

    #[test]
    fn ladder_monotone_random_data() {
        let mut rng = seeded_rng(5, 5);
        for _ in 0..10 {
            let data: Vec<f64> = (0..80).map(|_| rng.random_range(-3.0..3.0)).collect();
            let ladder = ocl_ladder(&data, 2, 8, 2.0, &KMeansConfig::default(), 1).unwrap();
            assert!(ladder.windows(2).all(|w| w[1] <= w[0]));
        }
    }

    #[test]
    fn correct_k_examples() {
        let truth: Vec<usize> = (1..=10).collect();
        assert_eq!(correct_k_count(&truth, &truth).unwrap(), 10);
        let off: Vec<usize> = truth.iter().map(|k| k + 1).collect();
        assert_eq!(correct_k_count(&off, &truth).unwrap(), 0);
        let mixed = [1, 2, 3, 3, 5, 6, 6, 8, 8, 10];
        assert_eq!(correct_k_count(&mixed, &truth).unwrap(), 7);
        let six = [1, 2, 3, 4, 5, 6, 1, 1, 1, 1];
        assert_eq!(correct_k_count(&six, &truth).unwrap(), 6);
        assert!(correct_k_count(&six[..3], &truth).is_err());
    }

    #[test]
    fn report_averages() {
        let reps = vec![
            RepetitionResult { cumulative_losses: vec![1.0, 3.0], ks: vec![1, 2], ocl: vec![0.5, 1.0] },
            RepetitionResult { cumulative_losses: vec![3.0, 5.0], ks: vec![1, 1], ocl: vec![0.5, 2.0] },
            RepetitionResult { cumulative_losses: vec![2.0, 4.0], ks: vec![2, 2], ocl: vec![0.5, 3.0] },
        ];
        let rep = regret_report(&reps, &[1, 2], 3, |t, k| (t * 10 + k) as f64).unwrap();
        assert_eq!(rep.rows[0].ecl, 2.0);
        assert_eq!(rep.rows[1].regret, 2.0);
        assert_eq!(rep.rows[0].k_mode, 1);
        assert_eq!(rep.rows[1].k_mode, 2);
        assert_eq!(rep.rows[1].bound_cor3, 22.0);
        assert_eq!(rep.correct_k, vec![2, 1, 1]);
    }

    #[test]
    fn mean_sd_small() {
        assert_eq!(mean_sd(&[3.0]), (3.0, None));
        let (m, s) = mean_sd(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert_eq!(s, Some(1.0));
    }
}
