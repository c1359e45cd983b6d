//! Every regret bound evaluated for one parameter set, each with its own error.

use pacbo_core::bounds::{bound_corollary1, bound_corollary2, bound_corollary3, bound_student, StudentBoundInput};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    pub k: usize,
    pub horizon: usize,
    pub d: usize,
    pub radius: f64,
    pub eta: f64,
    pub p: usize,
    /// Fixed inverse temperature for the fixed-lambda bound.
    pub lambda: Option<f64>,
    /// Student prior scale for the Student-prior bounds.
    pub tau0: Option<f64>,
    pub center_norm_sum: f64,
    /// Defaults to `radius`.
    pub max_obs_norm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundEntry {
    pub name: String,
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

fn entry(name: &str, value: Result<f64, String>) -> BoundEntry {
    match value {
        Ok(v) => BoundEntry { name: name.into(), value: Some(v), error: None },
        Err(e) => BoundEntry { name: name.into(), value: None, error: Some(e) },
    }
}

pub fn bound_table(b: &BoundParams) -> Vec<BoundEntry> {
    let cor1 = match b.lambda {
        Some(l) => bound_corollary1(b.k, b.horizon, b.d, b.radius, l, b.eta, b.p).map_err(|e| e.to_string()),
        None => Err("needs --lambda".to_string()),
    };
    let student = |adaptive: bool| match b.tau0 {
        Some(tau0) => bound_student(
            &StudentBoundInput {
                k: b.k,
                horizon: b.horizon,
                d: b.d,
                radius: b.radius,
                tau0,
                eta: b.eta,
                p: b.p,
                center_norm_sum: b.center_norm_sum,
                max_obs_norm: b.max_obs_norm.unwrap_or(b.radius),
            },
            adaptive,
        )
        .map_err(|e| e.to_string()),
        None => Err("needs --tau0".to_string()),
    };
    vec![
        entry("corollary1", cor1),
        entry("corollary2", bound_corollary2(b.k, b.horizon, b.d, b.radius, b.eta, b.p).map_err(|e| e.to_string())),
        entry("corollary3", bound_corollary3(b.k, b.horizon, b.d, b.radius, b.eta, b.p).map_err(|e| e.to_string())),
        entry("student", student(false)),
        entry("student_adaptive", student(true)),
    ]
}
