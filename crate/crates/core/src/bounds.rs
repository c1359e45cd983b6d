//! Right-hand sides of the regret bounds, without the oracle-loss term.
//!
//! Each function returns `bound - inf_c sum_t l(c, x_t)` for a fixed `k`, so
//! that comparing against `ECL - OCL` is a direct check.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::centers::Centers;
use crate::error::{invalid, Error, Result};
use crate::math::{exp, lgamma, log, log1p, pow, sq_norm, sqrt};

fn check_common(k: usize, horizon: usize, d: usize, radius: f64, eta: f64, p: usize) -> Result<()> {
    if d == 0 {
        return Err(invalid("d", "must be at least 1"));
    }
    if horizon == 0 {
        return Err(invalid("T", "must be at least 1"));
    }
    if p == 0 || k == 0 || k > p {
        return Err(Error::ClusterCountOutOfRange { k, p });
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(invalid("R", "must be positive and finite"));
    }
    if !(eta >= 0.0 && eta.is_finite()) {
        return Err(invalid("eta", "must be non-negative"));
    }
    Ok(())
}

/// Smallest `lambda` accepted by [`bound_corollary1`]: `(d+2) / (2 T R^2)`.
pub fn corollary1_min_lambda(horizon: usize, d: usize, radius: f64) -> f64 {
    (d as f64 + 2.0) / (2.0 * horizon as f64 * radius * radius)
}

/// Fixed-`lambda` bound:
/// `dk/(2l) log(8 R^2 l T/(d+2)) + eta k/l + log p/l + d/(2l) + 81 l T R^4 / 2`.
pub fn bound_corollary1(k: usize, horizon: usize, d: usize, radius: f64, lambda: f64, eta: f64, p: usize) -> Result<f64> {
    check_common(k, horizon, d, radius, eta, p)?;
    if !(lambda.is_finite() && lambda >= corollary1_min_lambda(horizon, d, radius)) {
        return Err(Error::Validity("lambda must be at least (d+2)/(2 T R^2)"));
    }
    let (kf, tf, df, r2) = (k as f64, horizon as f64, d as f64, radius * radius);
    Ok(df * kf / (2.0 * lambda) * log(8.0 * r2 * lambda * tf / (df + 2.0))
        + eta * kf / lambda
        + log(p as f64) / lambda
        + df / (2.0 * lambda)
        + 81.0 * lambda * tf * r2 * r2 / 2.0)
}

fn corollary2_3(k: usize, horizon: usize, d: usize, radius: f64, eta: f64, p: usize, variance_coef: f64) -> Result<f64> {
    check_common(k, horizon, d, radius, eta, p)?;
    let (kf, df, r2) = (k as f64, d as f64, radius * radius);
    let st = sqrt(horizon as f64);
    Ok(kf * df * r2 / (df + 2.0) * st * log(4.0 * st)
        + kf * 2.0 * r2 * eta / (df + 2.0) * st
        + (2.0 * r2 * log(p as f64) / (df + 2.0) + df * r2 / (df + 2.0) + variance_coef * (df + 2.0) * r2) * st)
}

/// Horizon-tuned bound with `lambda = (d+2)/(2 sqrt(T) R^2)`.
pub fn bound_corollary2(k: usize, horizon: usize, d: usize, radius: f64, eta: f64, p: usize) -> Result<f64> {
    corollary2_3(k, horizon, d, radius, eta, p, 81.0 / 4.0)
}

/// Adaptive bound with `lambda_t = (d+2)/(2 sqrt(t) R^2)`.
pub fn bound_corollary3(k: usize, horizon: usize, d: usize, radius: f64, eta: f64, p: usize) -> Result<f64> {
    corollary2_3(k, horizon, d, radius, eta, p, 81.0 / 2.0)
}

/// `(Gamma((3+d)/2) / (Gamma(3/2) Gamma(d/2+1)))^(1/d)`, the constant in the Student-prior bounds.
pub fn c_d(d: usize) -> f64 {
    let df = d as f64;
    exp((lgamma((3.0 + df) / 2.0) - lgamma(1.5) - lgamma(df / 2.0 + 1.0)) / df)
}

/// `Gamma((3+d)/2) / (Gamma(3/2) Gamma(d/2+1) 6^(d/2))`, the constant in the KL bound.
pub fn c_d_kl(d: usize) -> f64 {
    let df = d as f64;
    exp(lgamma((3.0 + df) / 2.0) - lgamma(1.5) - lgamma(df / 2.0 + 1.0) - df / 2.0 * log(6.0))
}

/// Smallest horizon for which the Student-prior bounds hold: `12 d tau0^4 / (c_d^2 R^4)`.
pub fn student_min_horizon(d: usize, radius: f64, tau0: f64) -> f64 {
    let c = c_d(d);
    12.0 * d as f64 * pow(tau0, 4.0) / (c * c * pow(radius, 4.0))
}

/// Inputs of the Student-prior regret bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StudentBoundInput {
    pub k: usize,
    pub horizon: usize,
    pub d: usize,
    pub radius: f64,
    pub tau0: f64,
    pub eta: f64,
    pub p: usize,
    /// `sum_j |c_j|` for the comparison centers.
    pub center_norm_sum: f64,
    /// `max_t |x_t|`; at most `radius`.
    pub max_obs_norm: f64,
}

/// Student-prior bound with `lambda = 1/sqrt(T)`; `adaptive` selects the
/// `lambda_t = 1/sqrt(t)` version whose variance term is twice as large.
pub fn bound_student(input: &StudentBoundInput, adaptive: bool) -> Result<f64> {
    let StudentBoundInput { k, horizon, d, radius, tau0, eta, p, center_norm_sum, max_obs_norm } = *input;
    check_common(k, horizon, d, radius, eta, p)?;
    if !(tau0 > 0.0 && tau0.is_finite()) {
        return Err(invalid("tau0", "must be positive"));
    }
    if !(0.0..=radius).contains(&max_obs_norm) {
        return Err(Error::Validity("observations must lie in the ball of radius R"));
    }
    if !(0.0..=k as f64 * radius).contains(&center_norm_sum) {
        return Err(Error::Validity("centers must lie in the ball of radius R"));
    }
    if (horizon as f64) < student_min_horizon(d, radius, tau0) {
        return Err(Error::Validity("T must be at least 12 d tau0^4 / (c_d^2 R^4)"));
    }
    let (kf, tf, df) = (k as f64, horizon as f64, d as f64);
    let st = sqrt(tf);
    let c = c_d(d);
    let c1 = pow(2.0 * radius + max_obs_norm, 2.0);
    let variance = if adaptive { c1 * c1 } else { c1 * c1 / 2.0 };
    Ok((3.0 + df) * kf * st * log(1.0 + 1.0 / (c * pow(tf, 0.25)) + center_norm_sum / (sqrt(6.0) * kf * tau0))
        + kf * df / 4.0 * st * log(tf)
        + (sqrt(3.0 * kf * kf * df + 12.0 * tau0 * tau0 / (c * c)) + eta * kf) * st
        + (log(p as f64) + variance) * st)
}

/// Upper bound on `KL(rho, pi)` when `rho` is a product of Student(3) blocks
/// with scale `tau`, centered at `locations` and truncated to radii `xi`.
pub fn kl_bound_student(locations: &Centers, tau: f64, xi: &[f64], tau0: f64, radius: f64, eta: f64, p: usize) -> Result<f64> {
    let (k, d) = (locations.k(), locations.dim());
    check_common(k, 1, d, radius, eta, p)?;
    if xi.len() != k {
        return Err(Error::LengthMismatch { left: xi.len(), right: k });
    }
    if !(tau0 > 0.0 && tau0.is_finite()) {
        return Err(invalid("tau0", "must be positive"));
    }
    let df = d as f64;
    if !(tau > 0.0 && tau * tau <= sqrt(3.0) * radius * radius / (6.0 * sqrt(df))) {
        return Err(Error::Validity("tau^2 must lie in (0, sqrt(3) R^2 / (6 sqrt(d))]"));
    }
    if xi.iter().any(|&x| !(x > 0.0 && x <= radius)) {
        return Err(Error::Validity("xi_j must lie in (0, R]"));
    }
    let norms: Vec<f64> = locations.points().map(|c| sqrt(sq_norm(c))).collect();
    if norms.iter().any(|&n| n > radius) {
        return Err(Error::Validity("locations must lie in the ball of radius R"));
    }
    let kf = k as f64;
    let per_block: f64 = xi
        .iter()
        .map(|&x| (3.0 + df) / 2.0 * log1p(x * x / (6.0 * tau * tau)) - df / 2.0 * log(x * x))
        .sum();
    let norm_sum: f64 = norms.iter().sum();
    Ok(per_block - kf * log(c_d_kl(d))
        + (3.0 + df) * kf * log(1.0 + tau / tau0 + norm_sum / (sqrt(6.0) * kf * tau0))
        + kf * df * log(tau0)
        + log(p as f64)
        + eta * (kf - 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{fabs, PI};

    fn rel(a: f64, b: f64) -> f64 {
        fabs(a - b) / fabs(b).max(1e-300)
    }

    #[test]
    fn c_d_at_one() {
        assert!(rel(c_d(1), 4.0 / PI) < 1e-14);
        // d = 2: Gamma(5/2) / (Gamma(3/2) Gamma(2)) = 3/2, square root
        assert!(rel(c_d(2), sqrt(1.5)) < 1e-14);
        assert!(rel(c_d_kl(1), 4.0 / (PI * sqrt(6.0))) < 1e-14);
    }

    #[test]
    fn corollary1_substitution() {
        // d=2, R=1, T=100, k=1, eta=0, p=5, lambda=0.2
        let v = bound_corollary1(1, 100, 2, 1.0, 0.2, 0.0, 5).unwrap();
        let expected = 2.0 / 0.4 * log(8.0 * 0.2 * 100.0 / 4.0) + log(5.0) / 0.2 + 1.0 / 0.2 + 81.0 * 0.2 * 100.0 / 2.0;
        assert!(rel(v, expected) < 1e-12);
        let v2 = bound_corollary1(2, 100, 2, 1.0, 0.2, 0.0, 5).unwrap();
        assert!(rel(v2 - v, 2.0 / 0.4 * log(40.0)) < 1e-12);
        assert!(bound_corollary1(1, 100, 2, 1.0, 0.019, 0.0, 5).is_err());
        assert!(bound_corollary1(1, 100, 2, 1.0, 0.02, 0.0, 5).is_ok());
    }

    #[test]
    fn corollary2_vs_3() {
        let a = bound_corollary2(10, 200, 2, 15.0, 0.0, 20).unwrap();
        let b = bound_corollary3(10, 200, 2, 15.0, 0.0, 20).unwrap();
        assert!(rel(b - a, 81.0 * 4.0 * 225.0 / 4.0 * sqrt(200.0)) < 1e-12);
        let e = bound_corollary3(10, 200, 2, 15.0, 0.5, 20).unwrap();
        assert!(rel(e - b, 10.0 * 2.0 * 225.0 * 0.5 / 4.0 * sqrt(200.0)) < 1e-12);
    }

    #[test]
    fn student_adaptive_difference() {
        let input = StudentBoundInput {
            k: 10,
            horizon: 200,
            d: 2,
            radius: 15.0,
            tau0: 1.0,
            eta: 0.0,
            p: 20,
            center_norm_sum: 50.0,
            max_obs_norm: 15.0,
        };
        let a = bound_student(&input, false).unwrap();
        let b = bound_student(&input, true).unwrap();
        let c1 = 45.0f64 * 45.0;
        assert!(rel(b - a, c1 * c1 / 2.0 * sqrt(200.0)) < 1e-12);
        let tiny = StudentBoundInput { radius: 0.1, max_obs_norm: 0.1, center_norm_sum: 0.0, ..input };
        assert!(matches!(bound_student(&tiny, false), Err(Error::Validity(_))));
    }

    #[test]
    fn kl_bound_monotone_in_norms() {
        let near = Centers::new(1, alloc::vec![0.1]).unwrap();
        let far = Centers::new(1, alloc::vec![0.9]).unwrap();
        let a = kl_bound_student(&near, 0.1, &[0.5], 1.0, 1.0, 0.0, 1).unwrap();
        let b = kl_bound_student(&far, 0.1, &[0.5], 1.0, 1.0, 0.0, 1).unwrap();
        assert!(b > a);
        assert!(kl_bound_student(&near, 0.1, &[1.5], 1.0, 1.0, 0.0, 1).is_err());
        assert!(kl_bound_student(&near, 1.0, &[0.5], 1.0, 1.0, 0.0, 1).is_err());
    }
}
