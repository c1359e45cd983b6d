//! Quasi-Bayesian online clustering with a time-varying number of clusters.
//!
//! At every time step a vector of cluster centers is drawn from a Gibbs
//! quasi-posterior built from the cumulative clustering loss of the past
//! stream and a model-selection prior over the number of cells. Sampling
//! uses a reversible-jump Metropolis-Hastings kernel whose proposals are
//! multivariate Student blocks centered at k-means fits of the past data.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, the command line
//! front end and parallel experiment drivers live in the `pacbo` crate.
#![no_std]
#![warn(missing_debug_implementations)]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod bounds;
pub mod centers;
pub mod config;
pub mod datagen;
mod error;
pub mod kmeans;
pub mod loss;
mod math;
pub mod metrics;
pub mod online;
pub mod prior;
pub mod proposal;
pub mod rjmcmc;
pub mod rng;
pub mod schedule;
pub mod student;
pub mod target;

pub use centers::{Centers, Observation};
pub use config::{KMeansConfig, PacboConfig, PriorKind};
pub use error::{Error, Result};
pub use loss::{instantaneous_loss, score, ScoreAccumulator, ScoreContext, StreamHistory};
pub use online::{run_stream, OnlineClusterer, RunRecord, StepRecord};
pub use prior::PriorSpec;
pub use rjmcmc::{ChainState, ChainTrace, TraceEntry};
pub use schedule::LambdaSchedule;
pub use target::TargetDensity;
