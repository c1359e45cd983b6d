//! Proposal locations and scales for the reversible-jump kernel.

use alloc::vec::Vec;

use crate::centers::Centers;
use crate::config::KMeansConfig;
use crate::error::{invalid, Result};
use crate::kmeans::{fit_rung, KMeansFit};
use crate::math::sqrt;

pub use crate::student::{student_log_density, student_sample, ProposalParams};

/// `tau' = 1 / sqrt(p t)`; `t = 0` is treated as the first step.
pub fn tau_schedule(p: usize, t: usize) -> f64 {
    1.0 / sqrt((p.max(1) * t.max(1)) as f64)
}

/// Supplies the proposal location vector for each dimension `k`.
pub trait LocationSource {
    /// Makes `locations(k)` available.
    fn prepare(&mut self, k: usize) -> Result<()>;
    /// Locations for `k`, which must have been prepared.
    fn locations(&self, k: usize) -> &Centers;
}

/// A fixed table of locations, indexed by `k - 1`.
#[derive(Debug, Clone)]
pub struct FixedLocations(pub Vec<Centers>);

impl LocationSource for FixedLocations {
    fn prepare(&mut self, k: usize) -> Result<()> {
        if k == 0 || k > self.0.len() {
            return Err(invalid("k", "no locations for this dimension"));
        }
        Ok(())
    }

    fn locations(&self, k: usize) -> &Centers {
        &self.0[k - 1]
    }
}

/// k-means fits of the data prefix `x_1..x_n`, computed on demand and kept
/// until the prefix length changes.
#[derive(Debug, Clone)]
pub struct KMeansCache {
    cfg: KMeansConfig,
    seed: u64,
    jitter: f64,
    prefix_len: usize,
    fits: Vec<KMeansFit>,
}

impl KMeansCache {
    /// `jitter` is the spread of the copies used when there are fewer points than centers.
    pub fn new(cfg: KMeansConfig, seed: u64, jitter: f64) -> Self {
        KMeansCache { cfg, seed, jitter, prefix_len: 0, fits: Vec::new() }
    }

    pub fn prefix_len(&self) -> usize {
        self.prefix_len
    }

    /// Number of `k` values fitted for the current prefix.
    pub fn fitted(&self) -> usize {
        self.fits.len()
    }

    /// Drops all fits if the prefix length differs from the cached one.
    pub fn sync(&mut self, prefix_len: usize) {
        if prefix_len != self.prefix_len {
            self.prefix_len = prefix_len;
            self.fits.clear();
        }
    }

    pub fn fit(&self, k: usize) -> Option<&KMeansFit> {
        self.fits.get(k.wrapping_sub(1))
    }

    /// Fits every missing `j <= k` on `data`, whose length must match the synced prefix.
    pub fn ensure(&mut self, data: &[f64], d: usize, k: usize) -> Result<()> {
        if data.len() != self.prefix_len * d {
            return Err(crate::error::Error::CacheMismatch { cached: self.prefix_len, available: data.len() / d.max(1) });
        }
        while self.fits.len() < k {
            let j = self.fits.len() + 1;
            let fit = fit_rung(data, d, j, &self.cfg, self.seed, self.prefix_len as u64, self.jitter, self.fits.last())?;
            self.fits.push(fit);
        }
        Ok(())
    }

    /// Binds the cache to the data it was synced on.
    pub fn bind<'a>(&'a mut self, data: &'a [f64], d: usize) -> BoundKMeans<'a> {
        BoundKMeans { cache: self, data, d }
    }
}

/// A cache paired with its data prefix, usable as a [`LocationSource`].
#[derive(Debug)]
pub struct BoundKMeans<'a> {
    cache: &'a mut KMeansCache,
    data: &'a [f64],
    d: usize,
}

impl LocationSource for BoundKMeans<'_> {
    fn prepare(&mut self, k: usize) -> Result<()> {
        self.cache.ensure(self.data, self.d, k)
    }

    fn locations(&self, k: usize) -> &Centers {
        &self.cache.fits[k - 1].centers
    }
}
