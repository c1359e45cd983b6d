//! Inverse-temperature schedules `lambda_t`.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::math::sqrt;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LambdaSchedule {
    /// Constant `lambda` for every `t`, including `lambda_0`.
    Fixed { value: f64 },
    /// `(d+2) / (2 sqrt(T) R^2)` for a horizon `T` known in advance.
    Corollary2 { radius: f64, horizon: usize },
    /// `(d+2) / (2 sqrt(t) R^2)` with `lambda_0 = 1`.
    Corollary3 { radius: f64 },
    /// `0.6 (d+2) / (2 sqrt(t))`; `lambda_0` repeats `lambda_1`.
    #[default]
    PacboDefault,
    /// `1 / sqrt(t)` with `lambda_0 = 1`.
    UnitFree,
    /// Explicit `lambda_0, lambda_1, ...`.
    Custom { values: Vec<f64> },
}

impl LambdaSchedule {
    pub fn lambda_at(&self, d: usize, t: usize) -> Result<f64> {
        let dd = d as f64;
        let value = match self {
            LambdaSchedule::Fixed { value } => *value,
            LambdaSchedule::Corollary2 { radius, horizon } => {
                if t > *horizon {
                    return Err(Error::BeyondHorizon { t, horizon: *horizon });
                }
                (dd + 2.0) / (2.0 * sqrt(*horizon as f64) * radius * radius)
            }
            LambdaSchedule::Corollary3 { radius } => {
                if t == 0 {
                    1.0
                } else {
                    (dd + 2.0) / (2.0 * sqrt(t as f64) * radius * radius)
                }
            }
            LambdaSchedule::PacboDefault => 0.6 * (dd + 2.0) / (2.0 * sqrt(t.max(1) as f64)),
            LambdaSchedule::UnitFree => {
                if t == 0 {
                    1.0
                } else {
                    1.0 / sqrt(t as f64)
                }
            }
            LambdaSchedule::Custom { values } => match values.get(t) {
                Some(v) => *v,
                None => return Err(Error::BeyondHorizon { t, horizon: values.len().saturating_sub(1) }),
            },
        };
        Ok(value)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        match self {
            LambdaSchedule::Fixed { value } if !positive(*value) => Err(invalid("lambda", "must be positive")),
            LambdaSchedule::Corollary2 { radius, horizon } => {
                if !positive(*radius) {
                    Err(invalid("lambda.radius", "must be positive"))
                } else if *horizon == 0 {
                    Err(invalid("lambda.horizon", "must be at least 1"))
                } else {
                    Ok(())
                }
            }
            LambdaSchedule::Corollary3 { radius } if !positive(*radius) => {
                Err(invalid("lambda.radius", "must be positive"))
            }
            LambdaSchedule::Custom { values } if values.is_empty() || !values.iter().all(|v| positive(*v)) => {
                Err(invalid("lambda.values", "must be a non-empty list of positive numbers"))
            }
            _ => Ok(()),
        }
    }
}
