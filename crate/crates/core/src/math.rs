//! Float helpers routed through `libm` so results do not depend on the
//! platform math library.

pub(crate) use libm::{exp, fabs, floor, lgamma, log, log1p, pow, sin, sqrt};

pub(crate) const PI: f64 = core::f64::consts::PI;

pub(crate) fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    let sum: f64 = values.map(|v| exp(v - max)).sum();
    max + log(sum)
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub(crate) fn sq_norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum()
}
