//! Multivariate Student distribution with 3 degrees of freedom.
//!
//! One block in `R^d` with location `m` and scale `tau` has density
//! `C^{-1} (1 + |x - m|^2 / (6 tau^2))^{-(3+d)/2}`, i.e. a Student(3) law
//! with scale matrix `2 tau^2 I`. A center vector is a product of `k`
//! independent blocks. The same kernel backs the proposal densities and,
//! truncated, the heavy-tailed prior.

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::centers::Centers;
use crate::error::{invalid, Error, Result};
use crate::math::{lgamma, log, log1p, sq_dist, sqrt, PI};

/// Locations and scale of a product-of-Student proposal on `R^{dk}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProposalParams {
    pub locations: Centers,
    pub tau: f64,
}

impl ProposalParams {
    pub fn new(locations: Centers, tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(invalid("tau", "must be positive"));
        }
        Ok(ProposalParams { locations, tau })
    }

    pub fn k(&self) -> usize {
        self.locations.k()
    }
}

/// Log normalizing constant of one block: `log Gamma((3+d)/2) - log Gamma(3/2) - (d/2) log(6 pi tau^2)`.
pub fn block_log_norm(d: usize, tau: f64) -> f64 {
    let dd = d as f64;
    lgamma(0.5 * (3.0 + dd)) - lgamma(1.5) - 0.5 * dd * log(6.0 * PI * tau * tau)
}

#[inline]
pub(crate) fn block_log_kernel(sq_dist: f64, d: usize, tau: f64) -> f64 {
    -0.5 * (3.0 + d as f64) * log1p(sq_dist / (6.0 * tau * tau))
}

pub(crate) fn product_log_density_flat(coords: &[f64], locations: &[f64], d: usize, tau: f64) -> f64 {
    let k = coords.len() / d;
    let kernel: f64 = coords
        .chunks_exact(d)
        .zip(locations.chunks_exact(d))
        .map(|(c, m)| block_log_kernel(sq_dist(c, m), d, tau))
        .sum();
    kernel + k as f64 * block_log_norm(d, tau)
}

/// Exact log-density of the product proposal at `c`.
pub fn student_log_density(c: &Centers, params: &ProposalParams) -> Result<f64> {
    let loc = &params.locations;
    if c.dim() != loc.dim() {
        return Err(Error::DimensionMismatch { expected: loc.dim(), got: c.dim() });
    }
    if c.k() != loc.k() {
        return Err(Error::DimensionMismatch { expected: loc.k() * loc.dim(), got: c.k() * c.dim() });
    }
    Ok(product_log_density_flat(c.as_flat(), loc.as_flat(), c.dim(), params.tau))
}

/// Writes `m + sqrt(2) tau G / sqrt(W / 3)` into `out`, with `G` standard
/// Gaussian in `R^d` and `W` chi-squared with 3 degrees of freedom.
pub(crate) fn sample_block<R: Rng + ?Sized>(rng: &mut R, location: &[f64], tau: f64, out: &mut [f64]) {
    let w: f64 = (0..3)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            z * z
        })
        .sum();
    let scale = sqrt(2.0) * tau / sqrt(w / 3.0);
    for (o, m) in out.iter_mut().zip(location) {
        let g: f64 = StandardNormal.sample(rng);
        *o = m + scale * g;
    }
}

/// Independent draw of each block around its location.
pub fn student_sample<R: Rng + ?Sized>(params: &ProposalParams, rng: &mut R) -> Centers {
    let d = params.locations.dim();
    let mut coords = Vec::with_capacity(params.locations.as_flat().len());
    coords.resize(params.locations.as_flat().len(), 0.0);
    for (out, m) in coords.chunks_exact_mut(d).zip(params.locations.points()) {
        sample_block(rng, m, params.tau, out);
    }
    Centers::from_raw(d, coords)
}
