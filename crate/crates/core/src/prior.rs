//! Model-selection prior `pi(c) = sum_k q(k) 1{c in R^{dk}} pi_k(c)`.
//!
//! `q(k) ~ exp(-eta k)` on `{1..p}`. `pi_k` is either a product of uniform
//! laws on the ball `B_d(2R)` or a product of Student(3) laws with scale
//! `tau0` truncated to the same ball. All log-densities carry their
//! normalizing constants, since those enter transdimensional acceptance ratios.

use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::centers::Centers;
use crate::config::PriorKind;
use crate::error::{invalid, Error, Result};
use crate::math::{exp, lgamma, log, pow, sq_norm, sqrt, PI};
use crate::rng::{purpose_rng, Purpose};
use crate::student::{block_log_kernel, block_log_norm, sample_block};

/// `log q(k)` for `q(k) = exp(-eta k) / sum_{i=1}^p exp(-eta i)`.
pub fn log_q(k: usize, p: usize, eta: f64) -> Result<f64> {
    if k == 0 || k > p {
        return Err(Error::ClusterCountOutOfRange { k, p });
    }
    if !(eta >= 0.0) {
        return Err(invalid("eta", "must be non-negative"));
    }
    // shift by exp(-eta) so the sum is in [1, p]
    let norm: f64 = (0..p).map(|i| exp(-eta * i as f64)).sum();
    Ok(-eta * (k - 1) as f64 - log(norm))
}

/// Log-density of one center under the uniform law on `B_d(2R)`.
fn uniform_block_log_density(d: usize, radius: f64) -> f64 {
    let dd = d as f64;
    lgamma(0.5 * dd + 1.0) - 0.5 * dd * log(PI) - dd * log(2.0 * radius)
}

/// Product of uniform laws on `B_d(2R)`; `-inf` outside the support.
pub fn log_prior_uniform(c: &Centers, radius: f64) -> f64 {
    let limit = 4.0 * radius * radius;
    if c.points().any(|p| sq_norm(p) > limit) {
        return f64::NEG_INFINITY;
    }
    c.k() as f64 * uniform_block_log_density(c.dim(), radius)
}

/// Monte Carlo estimate of `P(|sqrt(2) tau0 Z|_2 <= 2R)` for a standard
/// Student(3) vector `Z` in `R^d`, i.e. the truncation mass of one prior block.
#[derive(Debug, Clone, PartialEq)]
pub struct StudentNorm {
    pub d: usize,
    pub radius: f64,
    pub tau0: f64,
    pub probability: f64,
    pub std_err: f64,
    pub samples: usize,
    pub seed: u64,
}

impl StudentNorm {
    pub fn estimate(d: usize, radius: f64, tau0: f64, samples: usize, seed: u64) -> Result<Self> {
        if d == 0 {
            return Err(invalid("d", "must be positive"));
        }
        if !(tau0 > 0.0 && tau0.is_finite()) {
            return Err(invalid("tau0", "must be positive"));
        }
        if !(radius > 0.0) {
            return Err(invalid("radius", "must be positive"));
        }
        if radius == f64::INFINITY {
            return Ok(StudentNorm { d, radius, tau0, probability: 1.0, std_err: 0.0, samples: 0, seed });
        }
        if samples == 0 {
            return Err(invalid("samples", "must be positive"));
        }
        let index = (d as u64) << 32;
        let mut rng = purpose_rng(seed, Purpose::StudentNorm, index);
        let origin = alloc::vec![0.0; d];
        let mut block = alloc::vec![0.0; d];
        let limit = 4.0 * radius * radius;
        let mut inside = 0usize;
        for _ in 0..samples {
            sample_block(&mut rng, &origin, tau0, &mut block);
            if sq_norm(&block) <= limit {
                inside += 1;
            }
        }
        let probability = inside as f64 / samples as f64;
        if inside == 0 {
            return Err(Error::Validity("truncation ball has no Monte Carlo mass; increase samples or radius"));
        }
        let std_err = sqrt(probability * (1.0 - probability) / samples as f64);
        Ok(StudentNorm { d, radius, tau0, probability, std_err, samples, seed })
    }

    /// Standard error of `log probability` (delta method).
    pub fn log_std_err(&self) -> f64 {
        self.std_err / self.probability
    }
}

/// Truncated Student(3) prior with scale `tau0`; `-inf` outside `B_d(2R)`.
pub fn log_prior_student(c: &Centers, radius: f64, tau0: f64, norm: &StudentNorm) -> Result<f64> {
    if norm.d != c.dim() {
        return Err(Error::DimensionMismatch { expected: norm.d, got: c.dim() });
    }
    if norm.radius != radius || norm.tau0 != tau0 {
        return Err(invalid("norm", "truncation constant was estimated for other parameters"));
    }
    Ok(student_prior_flat(c.as_flat(), c.dim(), radius, tau0, log(norm.probability)))
}

fn student_prior_flat(coords: &[f64], d: usize, radius: f64, tau0: f64, log_mass: f64) -> f64 {
    let limit = 4.0 * radius * radius;
    let block_const = block_log_norm(d, tau0) - log_mass;
    let mut total = 0.0;
    for p in coords.chunks_exact(d) {
        let r2 = sq_norm(p);
        if r2 > limit {
            return f64::NEG_INFINITY;
        }
        total += block_const + block_log_kernel(r2, d, tau0);
    }
    total
}

/// Fully specified prior over `C = U_{k<=p} R^{dk}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorSpec {
    kind: PriorKind,
    p: usize,
    d: usize,
    radius: f64,
    eta: f64,
    log_q: Vec<f64>,
    student_norm: Option<StudentNorm>,
}

impl PriorSpec {
    pub fn uniform(p: usize, d: usize, radius: f64, eta: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(invalid("radius", "must be positive and finite"));
        }
        Self::build(PriorKind::UniformBall, p, d, radius, eta, None)
    }

    /// Estimates the truncation constant eagerly with `samples` draws.
    pub fn truncated_student(p: usize, d: usize, radius: f64, eta: f64, tau0: f64, samples: usize, seed: u64) -> Result<Self> {
        let norm = StudentNorm::estimate(d, radius, tau0, samples, seed)?;
        Self::build(PriorKind::TruncatedStudent { tau0 }, p, d, radius, eta, Some(norm))
    }

    pub fn from_config(cfg: &crate::config::PacboConfig) -> Result<Self> {
        match cfg.prior {
            PriorKind::UniformBall => Self::uniform(cfg.p, cfg.d, cfg.radius, cfg.eta),
            PriorKind::TruncatedStudent { tau0 } => {
                Self::truncated_student(cfg.p, cfg.d, cfg.radius, cfg.eta, tau0, cfg.student_norm_samples, cfg.seed)
            }
        }
    }

    fn build(kind: PriorKind, p: usize, d: usize, radius: f64, eta: f64, student_norm: Option<StudentNorm>) -> Result<Self> {
        if p == 0 {
            return Err(invalid("p", "must be at least 1"));
        }
        if d == 0 {
            return Err(invalid("d", "must be at least 1"));
        }
        let log_q = (1..=p).map(|k| log_q(k, p, eta)).collect::<Result<Vec<_>>>()?;
        Ok(PriorSpec { kind, p, d, radius, eta, log_q, student_norm })
    }

    pub fn kind(&self) -> PriorKind {
        self.kind
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn student_norm(&self) -> Option<&StudentNorm> {
        self.student_norm.as_ref()
    }

    /// `log q(k)` from the precomputed table.
    pub fn log_q(&self, k: usize) -> Result<f64> {
        if k == 0 || k > self.p {
            return Err(Error::ClusterCountOutOfRange { k, p: self.p });
        }
        Ok(self.log_q[k - 1])
    }

    /// Whether every center lies in the support ball `B_d(2R)`.
    pub fn in_support(&self, c: &Centers) -> bool {
        let limit = 4.0 * self.radius * self.radius;
        c.points().all(|p| sq_norm(p) <= limit)
    }

    /// `log q(k) + log pi_k(c)`, `-inf` outside the support.
    pub fn log_prior(&self, c: &Centers) -> Result<f64> {
        if c.dim() != self.d {
            return Err(Error::DimensionMismatch { expected: self.d, got: c.dim() });
        }
        let lq = self.log_q(c.k())?;
        Ok(lq + self.log_slice_flat(c.as_flat()))
    }

    pub(crate) fn log_prior_flat(&self, coords: &[f64]) -> f64 {
        let k = coords.len() / self.d;
        self.log_q[k - 1] + self.log_slice_flat(coords)
    }

    fn log_slice_flat(&self, coords: &[f64]) -> f64 {
        match self.kind {
            PriorKind::UniformBall => {
                let limit = 4.0 * self.radius * self.radius;
                if coords.chunks_exact(self.d).any(|p| sq_norm(p) > limit) {
                    return f64::NEG_INFINITY;
                }
                (coords.len() / self.d) as f64 * uniform_block_log_density(self.d, self.radius)
            }
            PriorKind::TruncatedStudent { tau0 } => {
                let norm = self.student_norm.as_ref().expect("student prior carries its normalizer");
                student_prior_flat(coords, self.d, self.radius, tau0, log(norm.probability))
            }
        }
    }

    /// Draws `k ~ q` and then `k` independent centers from `pi_k`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Centers {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut k = self.p;
        for (i, lq) in self.log_q.iter().enumerate() {
            acc += exp(*lq);
            if u < acc {
                k = i + 1;
                break;
            }
        }
        self.sample_slice(k, rng)
    }

    /// `k` independent centers from `pi_k`.
    pub fn sample_slice<R: Rng + ?Sized>(&self, k: usize, rng: &mut R) -> Centers {
        let d = self.d;
        let mut coords = alloc::vec![0.0; k * d];
        match self.kind {
            PriorKind::UniformBall => {
                let outer = 2.0 * self.radius;
                for block in coords.chunks_exact_mut(d) {
                    let mut norm2 = 0.0;
                    while norm2 == 0.0 {
                        for v in block.iter_mut() {
                            *v = StandardNormal.sample(rng);
                        }
                        norm2 = sq_norm(block);
                    }
                    let u: f64 = rng.random();
                    let r = outer * pow(u, 1.0 / d as f64) / sqrt(norm2);
                    block.iter_mut().for_each(|v| *v *= r);
                }
            }
            PriorKind::TruncatedStudent { tau0 } => {
                let origin = alloc::vec![0.0; d];
                let limit = 4.0 * self.radius * self.radius;
                for block in coords.chunks_exact_mut(d) {
                    loop {
                        sample_block(rng, &origin, tau0, block);
                        if sq_norm(block) <= limit {
                            break;
                        }
                    }
                }
            }
        }
        Centers::from_raw(d, coords)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::fabs;
    use crate::rng::seeded_rng;

    fn c(d: usize, v: &[f64]) -> Centers {
        Centers::new(d, v.to_vec()).unwrap()
    }

    #[test]
    fn q_uniform_when_eta_zero() {
        for k in 1..=20 {
            assert!(fabs(log_q(k, 20, 0.0).unwrap() - log(1.0 / 20.0)) < 1e-14);
        }
    }

    #[test]
    fn q_two_cells() {
        let direct = log(exp(-1.0) / (exp(-1.0) + exp(-2.0)));
        assert!(fabs(log_q(1, 2, 1.0).unwrap() - direct) < 1e-14);
        assert!(fabs(exp(direct) - 0.73106) < 1e-5);
    }

    #[test]
    fn q_out_of_range() {
        assert!(matches!(log_q(0, 3, 0.0), Err(Error::ClusterCountOutOfRange { .. })));
        assert!(matches!(log_q(4, 3, 0.0), Err(Error::ClusterCountOutOfRange { .. })));
    }

    #[test]
    fn q_normalizes_and_decays() {
        for (p, eta) in [(1, 0.0), (5, 0.3), (20, 2.0), (50, 0.01)] {
            let total: f64 = (1..=p).map(|k| exp(log_q(k, p, eta).unwrap())).sum();
            assert!(fabs(total - 1.0) < 1e-12);
            for k in 1..p {
                let step = log_q(k + 1, p, eta).unwrap() - log_q(k, p, eta).unwrap();
                assert!(fabs(step + eta) < 1e-12);
            }
        }
    }

    #[test]
    fn uniform_interval_density() {
        // Gamma(3/2)/sqrt(pi) = 1/2, so the density on [-2, 2] is 1/4
        assert!(fabs(log_prior_uniform(&c(1, &[0.0]), 1.0) - log(0.25)) < 1e-14);
        assert_eq!(log_prior_uniform(&c(1, &[3.0]), 1.0), f64::NEG_INFINITY);
    }

    #[test]
    fn uniform_d2_pair_normalizes_by_mc() {
        // draw uniformly on the box [-2R, 2R]^4 and average the density times the box volume
        let r = 1.0;
        let mut rng = seeded_rng(3, 0);
        let n = 400_000;
        let mut acc = 0.0;
        for _ in 0..n {
            let v: Vec<f64> = (0..4).map(|_| (rng.random::<f64>() * 2.0 - 1.0) * 2.0 * r).collect();
            acc += exp(log_prior_uniform(&c(2, &v), r));
        }
        let vol = pow(4.0 * r, 4.0);
        let mass = acc / n as f64 * vol;
        assert!(fabs(mass - 1.0) < 1e-2, "{mass}");
    }

    #[test]
    fn student_untruncated_mode() {
        let norm = StudentNorm::estimate(1, f64::INFINITY, 1.0, 0, 0).unwrap();
        let v = log_prior_student(&c(1, &[0.0]), f64::INFINITY, 1.0, &norm).unwrap();
        assert!(fabs(v - log(2.0 / (PI * sqrt(6.0)))) < 1e-14);
    }

    #[test]
    fn student_outside_truncation() {
        let norm = StudentNorm::estimate(1, 1.0, 1.0, 10_000, 1).unwrap();
        let v = log_prior_student(&c(1, &[2.0 + 1e-9]), 1.0, 1.0, &norm).unwrap();
        assert_eq!(v, f64::NEG_INFINITY);
        assert!(log_prior_student(&c(1, &[2.0]), 1.0, 1.0, &norm).unwrap().is_finite());
    }

    #[test]
    fn student_d1_quadrature() {
        let (r, tau0) = (1.0, 1.0);
        let norm = StudentNorm::estimate(1, r, tau0, 1_000_000, 9).unwrap();
        let n = 20_000;
        let h = 4.0 * r / n as f64;
        let mut total = 0.0;
        for i in 0..n {
            let x = -2.0 * r + (i as f64 + 0.5) * h;
            total += exp(log_prior_student(&c(1, &[x]), r, tau0, &norm).unwrap()) * h;
        }
        assert!(fabs(total - 1.0) < 1e-3, "{total}");
    }

    #[test]
    fn log_prior_uniform_flat_within_slice() {
        let spec = PriorSpec::uniform(3, 2, 1.0, 0.0).unwrap();
        let a = spec.log_prior(&c(2, &[0.1, 0.2, -1.0, 0.5])).unwrap();
        let b = spec.log_prior(&c(2, &[1.5, 0.0, 0.0, -1.9])).unwrap();
        assert_eq!(a, b);
        assert!(matches!(
            spec.log_prior(&c(2, &[0.0; 8])),
            Err(Error::ClusterCountOutOfRange { k: 4, p: 3 })
        ));
    }

    #[test]
    fn per_slice_quadrature_equals_q() {
        // d = 1, p = 2, eta = 0.5, R = 1: midpoint rule on [-2, 2]^k
        let spec = PriorSpec::uniform(2, 1, 1.0, 0.5).unwrap();
        let n = 400;
        let h = 4.0 / n as f64;
        let grid = |i: usize| -2.0 + (i as f64 + 0.5) * h;
        let mut m1 = 0.0;
        for i in 0..n {
            m1 += exp(spec.log_prior(&c(1, &[grid(i)])).unwrap()) * h;
        }
        let mut m2 = 0.0;
        for i in 0..n {
            for j in 0..n {
                m2 += exp(spec.log_prior(&c(1, &[grid(i), grid(j)])).unwrap()) * h * h;
            }
        }
        let q1 = exp(log_q(1, 2, 0.5).unwrap());
        assert!(fabs(m1 - q1) < 1e-9);
        assert!(fabs(m2 - (1.0 - q1)) < 1e-9);
    }

    #[test]
    fn samples_stay_in_support() {
        let mut rng = seeded_rng(1, 1);
        let u = PriorSpec::uniform(4, 2, 0.5, 0.2).unwrap();
        let s = PriorSpec::truncated_student(4, 2, 0.5, 0.2, 1.0, 20_000, 2).unwrap();
        for _ in 0..2_000 {
            for spec in [&u, &s] {
                let draw = spec.sample(&mut rng);
                assert!(draw.k() >= 1 && draw.k() <= 4);
                assert!(spec.log_prior(&draw).unwrap().is_finite());
            }
        }
    }

    #[test]
    fn uniform_sampler_radial_law() {
        // P(|c| <= R) = (1/2)^d for the uniform law on B_d(2R)
        let spec = PriorSpec::uniform(1, 2, 1.0, 0.0).unwrap();
        let mut rng = seeded_rng(4, 0);
        let n = 100_000;
        let inside = (0..n).filter(|_| sq_norm(spec.sample(&mut rng).as_flat()) <= 1.0).count();
        assert!(fabs(inside as f64 / n as f64 - 0.25) < 0.01);
    }
}
