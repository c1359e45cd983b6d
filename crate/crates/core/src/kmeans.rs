//! Lloyd's algorithm with k-means++ seeding and restarts.
//!
//! Fits are built as a ladder `k = 1, 2, ...`: the fit for `k` always
//! includes, as one candidate, the best `k - 1` solution plus a new center at
//! the point farthest from it. Lloyd steps never increase the loss, so the
//! within-cluster loss is non-increasing in `k` on fixed data.

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::centers::Centers;
use crate::config::KMeansConfig;
use crate::error::{invalid, Result};
use crate::math::{sq_dist, sq_norm, sqrt};
use crate::rng::{purpose_rng, Purpose};

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    pub centers: Centers,
    /// Within-cluster sum of squared distances.
    pub loss: f64,
}

/// `sum_i min_j |x_i - c_j|^2` over flat data.
pub fn within_loss(data: &[f64], d: usize, centers: &[f64]) -> f64 {
    data.chunks_exact(d).map(|x| crate::loss::loss_flat(centers, d, x)).sum()
}

/// Best-of-restarts k-means fit of `data` (flat, dimension `d`) with exactly `k` centers.
pub fn kmeans_fit<R: Rng + ?Sized>(data: &[f64], d: usize, k: usize, cfg: &KMeansConfig, rng: &mut R) -> Result<Centers> {
    let seed = rng.next_u64();
    let jitter = 1e-6 * data_scale(data, d);
    let ladder = kmeans_ladder(data, d, k, cfg, seed, 0, jitter)?;
    Ok(ladder.into_iter().last().expect("ladder has k entries").centers)
}

/// Fits for every `j` in `1..=k_max`; fit `j` draws from its own stream keyed by `(seed, tag, j)`.
pub fn kmeans_ladder(data: &[f64], d: usize, k_max: usize, cfg: &KMeansConfig, seed: u64, tag: u64, jitter: f64) -> Result<Vec<KMeansFit>> {
    let mut ladder: Vec<KMeansFit> = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let fit = fit_rung(data, d, k, cfg, seed, tag, jitter, ladder.last())?;
        ladder.push(fit);
    }
    Ok(ladder)
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn fit_rung(
    data: &[f64],
    d: usize,
    k: usize,
    cfg: &KMeansConfig,
    seed: u64,
    tag: u64,
    jitter: f64,
    inherited: Option<&KMeansFit>,
) -> Result<KMeansFit> {
    if d == 0 || !data.len().is_multiple_of(d) {
        return Err(invalid("data", "length must be a multiple of the dimension"));
    }
    if k == 0 {
        return Err(invalid("k", "must be at least 1"));
    }
    if cfg.restarts == 0 {
        return Err(invalid("restarts", "must be at least 1"));
    }
    let mut rng = purpose_rng(seed, Purpose::KMeans, (tag << 16) | (k as u64 & 0xFFFF));
    let n = data.len() / d;
    if n <= k {
        return Ok(degenerate_fit(data, d, k, jitter, &mut rng));
    }
    let mut best: Option<KMeansFit> = None;
    let consider = |fit: KMeansFit, best: &mut Option<KMeansFit>| {
        if best.as_ref().is_none_or(|b| fit.loss < b.loss) {
            *best = Some(fit);
        }
    };
    if let Some(prev) = inherited.filter(|f| f.centers.k() + 1 == k) {
        let mut init = prev.centers.as_flat().to_vec();
        init.extend_from_slice(farthest_point(data, d, &init));
        consider(lloyd(data, d, init, cfg), &mut best);
    }
    for _ in 0..cfg.restarts {
        let init = plus_plus_init(data, d, k, jitter, &mut rng);
        consider(lloyd(data, d, init, cfg), &mut best);
    }
    Ok(best.expect("at least one candidate"))
}

fn data_scale(data: &[f64], d: usize) -> f64 {
    data.chunks_exact(d).map(|x| sqrt(sq_norm(x))).fold(1.0, f64::max)
}

fn jittered<R: Rng + ?Sized>(point: &[f64], jitter: f64, rng: &mut R) -> Vec<f64> {
    point
        .iter()
        .map(|p| {
            let e: f64 = StandardNormal.sample(rng);
            p + jitter * e
        })
        .collect()
}

/// At most `k` points: every point becomes a center, the rest are jittered copies.
fn degenerate_fit<R: Rng + ?Sized>(data: &[f64], d: usize, k: usize, jitter: f64, rng: &mut R) -> KMeansFit {
    let n = data.len() / d;
    let mut coords = Vec::with_capacity(k * d);
    coords.extend_from_slice(&data[..n.min(k) * d]);
    let origin = alloc::vec![0.0; d];
    let mut j = 0;
    while coords.len() < k * d {
        let base = if n == 0 { &origin[..] } else { &data[(j % n) * d..(j % n + 1) * d] };
        let copy = jittered(base, jitter, rng);
        coords.extend(copy);
        j += 1;
    }
    let loss = within_loss(data, d, &coords);
    KMeansFit { centers: Centers::from_raw(d, coords), loss }
}

fn farthest_point<'a>(data: &'a [f64], d: usize, centers: &[f64]) -> &'a [f64] {
    let mut best = (f64::NEG_INFINITY, &data[..d]);
    for x in data.chunks_exact(d) {
        let dist = crate::loss::loss_flat(centers, d, x);
        if dist > best.0 {
            best = (dist, x);
        }
    }
    best.1
}

fn plus_plus_init<R: Rng + ?Sized>(data: &[f64], d: usize, k: usize, jitter: f64, rng: &mut R) -> Vec<f64> {
    let n = data.len() / d;
    let mut centers = Vec::with_capacity(k * d);
    let first = rng.random_range(0..n);
    centers.extend_from_slice(&data[first * d..(first + 1) * d]);
    let mut dist: Vec<f64> = data.chunks_exact(d).map(|x| sq_dist(x, &centers[..d])).collect();
    while centers.len() < k * d {
        let total: f64 = dist.iter().sum();
        let pick = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut idx = n - 1;
            for (i, w) in dist.iter().enumerate() {
                if u < *w {
                    idx = i;
                    break;
                }
                u -= w;
            }
            idx
        } else {
            rng.random_range(0..n)
        };
        let point = &data[pick * d..(pick + 1) * d];
        let start = centers.len();
        if total > 0.0 {
            centers.extend_from_slice(point);
        } else {
            let copy = jittered(point, jitter, rng);
            centers.extend(copy);
        }
        let new_center = centers[start..].to_vec();
        for (w, x) in dist.iter_mut().zip(data.chunks_exact(d)) {
            *w = w.min(sq_dist(x, &new_center));
        }
    }
    centers
}

fn assign(data: &[f64], d: usize, centers: &[f64], labels: &mut [usize], dists: &mut [f64]) -> f64 {
    let mut loss = 0.0;
    for (i, x) in data.chunks_exact(d).enumerate() {
        let mut best = (f64::INFINITY, 0);
        for (j, c) in centers.chunks_exact(d).enumerate() {
            let dd = sq_dist(x, c);
            if dd < best.0 {
                best = (dd, j);
            }
        }
        labels[i] = best.1;
        dists[i] = best.0;
        loss += best.0;
    }
    loss
}

fn lloyd(data: &[f64], d: usize, mut centers: Vec<f64>, cfg: &KMeansConfig) -> KMeansFit {
    let n = data.len() / d;
    let k = centers.len() / d;
    let mut labels = alloc::vec![0usize; n];
    let mut dists = alloc::vec![0.0; n];
    let mut sums = alloc::vec![0.0; k * d];
    let mut counts = alloc::vec![0usize; k];
    let mut prev = f64::INFINITY;
    let mut loss = assign(data, d, &centers, &mut labels, &mut dists);
    for _ in 0..cfg.max_iter {
        if loss == 0.0 || (prev.is_finite() && prev - loss <= cfg.tol * prev) {
            break;
        }
        sums.iter_mut().for_each(|s| *s = 0.0);
        counts.iter_mut().for_each(|c| *c = 0);
        for (x, &l) in data.chunks_exact(d).zip(labels.iter()) {
            counts[l] += 1;
            for (s, v) in sums[l * d..(l + 1) * d].iter_mut().zip(x) {
                *s += v;
            }
        }
        for j in 0..k {
            if counts[j] > 0 {
                let inv = 1.0 / counts[j] as f64;
                for (c, s) in centers[j * d..(j + 1) * d].iter_mut().zip(&sums[j * d..(j + 1) * d]) {
                    *c = s * inv;
                }
            } else {
                // re-seed an empty cluster at the point worst served by the current assignment
                let (far, _) = dists.iter().enumerate().fold((0, f64::NEG_INFINITY), |acc, (i, v)| {
                    if *v > acc.1 {
                        (i, *v)
                    } else {
                        acc
                    }
                });
                centers[j * d..(j + 1) * d].copy_from_slice(&data[far * d..(far + 1) * d]);
                dists[far] = 0.0;
            }
        }
        prev = loss;
        loss = assign(data, d, &centers, &mut labels, &mut dists);
    }
    KMeansFit { centers: Centers::from_raw(d, centers), loss }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::fabs;
    use crate::rng::seeded_rng;
    use alloc::vec;
    use proptest::prelude::*;

    fn cfg() -> KMeansConfig {
        KMeansConfig::default()
    }

    #[test]
    fn single_cluster_is_the_mean() {
        let data = [1.0, 2.0, 3.0, -4.0, 5.0, 0.5];
        let mut rng = seeded_rng(1, 0);
        let c = kmeans_fit(&data, 2, 1, &cfg(), &mut rng).unwrap();
        assert!(fabs(c.point(0)[0] - 3.0) < 1e-12);
        assert!(fabs(c.point(0)[1] + 0.5) < 1e-12);
    }

    #[test]
    fn distinct_points_give_zero_loss() {
        let data = [0.0, 0.0, 5.0, 5.0, 0.0, 0.0, -3.0, 1.0, 5.0, 5.0];
        let mut rng = seeded_rng(2, 0);
        let c = kmeans_fit(&data, 2, 3, &cfg(), &mut rng).unwrap();
        assert_eq!(within_loss(&data, 2, c.as_flat()), 0.0);
    }

    #[test]
    fn two_symmetric_groups() {
        // brute force over all 2-partitions of {-1, -1, -1, 1, 1, 1}: best split by sign
        let data = [-1.0, 1.0, -1.0, 1.0, -1.0, 1.0];
        let mut best = f64::INFINITY;
        for mask in 1u32..(1 << 6) - 1 {
            let (mut a, mut b) = (vec![], vec![]);
            for (i, x) in data.iter().enumerate() {
                if mask & (1 << i) != 0 { a.push(*x) } else { b.push(*x) }
            }
            let sse = |g: &[f64]| {
                let m = g.iter().sum::<f64>() / g.len() as f64;
                g.iter().map(|v| (v - m) * (v - m)).sum::<f64>()
            };
            best = best.min(sse(&a) + sse(&b));
        }
        assert_eq!(best, 0.0);
        let mut rng = seeded_rng(3, 0);
        let c = kmeans_fit(&data, 1, 2, &cfg(), &mut rng).unwrap();
        let mut pts: Vec<f64> = c.as_flat().to_vec();
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(pts, vec![-1.0, 1.0]);
    }

    #[test]
    fn fewer_points_than_clusters() {
        let data = [2.0, -1.0];
        let mut rng = seeded_rng(4, 0);
        let c = kmeans_fit(&data, 2, 4, &cfg(), &mut rng).unwrap();
        assert_eq!(c.k(), 4);
        assert_eq!(c.point(0), &[2.0, -1.0]);
        for p in c.points().skip(1) {
            assert!(sq_dist(p, &[2.0, -1.0]) < 1e-9);
            assert!(p != [2.0, -1.0]);
        }
        let empty = kmeans_fit(&[], 2, 2, &cfg(), &mut rng).unwrap();
        assert_eq!(empty.k(), 2);
    }

    #[test]
    fn duplicates_fewer_distinct_than_k() {
        let data = [1.0, 1.0, 1.0, 2.0, 2.0];
        let mut rng = seeded_rng(5, 0);
        let c = kmeans_fit(&data, 1, 3, &cfg(), &mut rng).unwrap();
        assert_eq!(c.k(), 3);
        assert!(within_loss(&data, 1, c.as_flat()) < 1e-20);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]
        #[test]
        fn ladder_loss_non_increasing(data in prop::collection::vec(-10.0f64..10.0, 2..60), seed in any::<u64>()) {
            let d = 2;
            let n = data.len() / d;
            let data = &data[..n * d];
            let ladder = kmeans_ladder(data, d, 8, &KMeansConfig { restarts: 2, ..cfg() }, seed, 0, 1e-6).unwrap();
            for (j, fit) in ladder.iter().enumerate() {
                prop_assert_eq!(fit.centers.k(), j + 1);
                prop_assert!(fit.centers.as_flat().iter().all(|v| v.is_finite()));
            }
            for w in ladder.windows(2) {
                prop_assert!(w[1].loss <= w[0].loss);
            }
        }
    }
}
