//! Synthetic streams.
//!
//! The benchmark model has a single moving group center: it stays put for 20
//! steps, then jumps along the curve `y = 5 sin(x)`, so that after `t` steps
//! `min(ceil(t/20), 10)` groups have been visited. The first 100 points are
//! uniform on the unit square around the center, the rest are standard
//! Gaussian around it.

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::math::{floor, sin, sqrt, PI};

/// Steps spent at each group center.
pub const GROUP_LENGTH: usize = 20;
/// Number of distinct groups.
pub const GROUP_COUNT: usize = 10;
/// Steps drawn from the uniform law before switching to the Gaussian one.
pub const UNIFORM_PHASE: usize = 100;

/// Center of the benchmark model at time `t >= 1`.
pub fn benchmark_centers(t: usize) -> Result<[f64; 2]> {
    if t == 0 {
        return Err(invalid("t", "must be at least 1"));
    }
    let bucket = floor((t - 1) as f64 / GROUP_LENGTH as f64);
    let c1 = -2.5 * PI + (5.0 * PI / 9.0) * (bucket - 1.0);
    Ok([c1, 5.0 * sin(c1)])
}

/// `k*_t = min(ceil(t/20), 10)`.
pub fn benchmark_true_k(t: usize) -> usize {
    t.div_ceil(GROUP_LENGTH).min(GROUP_COUNT)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SyntheticSpec {
    TenGroups {
        horizon: usize,
    },
    /// I.i.d. draws from a Gaussian mixture.
    GaussianMixture {
        centers: Vec<Vec<f64>>,
        covariances: Vec<Vec<Vec<f64>>>,
        weights: Vec<f64>,
        horizon: usize,
    },
    FixedPoints {
        points: Vec<Vec<f64>>,
    },
}

/// A generated stream in flat row-major form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stream {
    pub d: usize,
    pub data: Vec<f64>,
    /// True number of groups at each `t`, when the generator knows it.
    pub k_true: Option<Vec<usize>>,
}

impl Stream {
    pub fn len(&self) -> usize {
        self.data.len() / self.d
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn observation(&self, t: usize) -> &[f64] {
        &self.data[(t - 1) * self.d..t * self.d]
    }

    pub fn max_norm(&self) -> f64 {
        self.data.chunks_exact(self.d).map(|x| sqrt(crate::math::sq_norm(x))).fold(0.0, f64::max)
    }
}

impl SyntheticSpec {
    pub fn dim(&self) -> Result<usize> {
        match self {
            SyntheticSpec::TenGroups { .. } => Ok(2),
            SyntheticSpec::GaussianMixture { centers, .. } => centers.first().map(Vec::len).ok_or(invalid("centers", "empty")),
            SyntheticSpec::FixedPoints { points } => points.first().map(Vec::len).ok_or(invalid("points", "empty")),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim()?;
        if d == 0 {
            return Err(invalid("d", "must be at least 1"));
        }
        match self {
            SyntheticSpec::TenGroups { horizon } | SyntheticSpec::GaussianMixture { horizon, .. } if *horizon == 0 => {
                Err(invalid("horizon", "must be at least 1"))
            }
            SyntheticSpec::TenGroups { .. } => Ok(()),
            SyntheticSpec::GaussianMixture { centers, covariances, weights, .. } => {
                if covariances.len() != centers.len() || weights.len() != centers.len() {
                    return Err(Error::LengthMismatch { left: weights.len(), right: centers.len() });
                }
                if weights.iter().any(|w| !(*w >= 0.0 && w.is_finite())) || crate::math::fabs(weights.iter().sum::<f64>() - 1.0) > 1e-9 {
                    return Err(invalid("weights", "must be non-negative and sum to 1"));
                }
                for (c, cov) in centers.iter().zip(covariances) {
                    if c.len() != d || c.iter().any(|v| !v.is_finite()) {
                        return Err(Error::DimensionMismatch { expected: d, got: c.len() });
                    }
                    cholesky(cov, d)?;
                }
                Ok(())
            }
            SyntheticSpec::FixedPoints { points } => {
                if points.iter().any(|x| x.len() != d) {
                    return Err(invalid("points", "all points need the same dimension"));
                }
                if points.iter().flatten().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite("points"));
                }
                Ok(())
            }
        }
    }
}

/// Lower Cholesky factor of a symmetric positive definite `d x d` matrix.
fn cholesky(m: &[Vec<f64>], d: usize) -> Result<Vec<f64>> {
    if m.len() != d || m.iter().any(|row| row.len() != d) {
        return Err(invalid("covariance", "must be a d x d matrix"));
    }
    let mut l = alloc::vec![0.0; d * d];
    for i in 0..d {
        for j in 0..=i {
            if crate::math::fabs(m[i][j] - m[j][i]) > 1e-12 * (1.0 + crate::math::fabs(m[i][j])) {
                return Err(invalid("covariance", "must be symmetric"));
            }
            let s: f64 = (0..j).map(|r| l[i * d + r] * l[j * d + r]).sum();
            if i == j {
                let v = m[i][i] - s;
                if !(v > 0.0) {
                    return Err(invalid("covariance", "must be positive definite"));
                }
                l[i * d + i] = sqrt(v);
            } else {
                l[i * d + j] = (m[i][j] - s) / l[j * d + j];
            }
        }
    }
    Ok(l)
}

/// Draws the stream described by `spec`.
pub fn generate<R: Rng + ?Sized>(spec: &SyntheticSpec, rng: &mut R) -> Result<Stream> {
    spec.validate()?;
    let d = spec.dim()?;
    match spec {
        SyntheticSpec::TenGroups { horizon } => {
            let mut data = Vec::with_capacity(2 * horizon);
            for t in 1..=*horizon {
                let c = benchmark_centers(t)?;
                for cj in c {
                    let x = if t <= UNIFORM_PHASE {
                        cj + rng.random::<f64>() - 0.5
                    } else {
                        let z: f64 = StandardNormal.sample(rng);
                        cj + z
                    };
                    data.push(x);
                }
            }
            Ok(Stream { d, data, k_true: Some((1..=*horizon).map(benchmark_true_k).collect()) })
        }
        SyntheticSpec::GaussianMixture { centers, covariances, weights, horizon } => {
            let factors = covariances.iter().map(|c| cholesky(c, d)).collect::<Result<Vec<_>>>()?;
            let mut data = Vec::with_capacity(d * horizon);
            let mut z = alloc::vec![0.0; d];
            for _ in 0..*horizon {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut comp = weights.len() - 1;
                for (i, w) in weights.iter().enumerate() {
                    acc += w;
                    if u < acc {
                        comp = i;
                        break;
                    }
                }
                z.iter_mut().for_each(|v| *v = StandardNormal.sample(rng));
                let l = &factors[comp];
                for i in 0..d {
                    let noise: f64 = (0..=i).map(|j| l[i * d + j] * z[j]).sum();
                    data.push(centers[comp][i] + noise);
                }
            }
            let k = weights.iter().filter(|w| **w > 0.0).count();
            Ok(Stream { d, data, k_true: Some(alloc::vec![k; *horizon]) })
        }
        SyntheticSpec::FixedPoints { points } => Ok(Stream { d, data: points.concat(), k_true: None }),
    }
}
