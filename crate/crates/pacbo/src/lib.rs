//! File formats, experiment drivers and the command line front end for
//! [`pacbo_core`].
//!
//! Runs are written as JSON lines (one [`StepRecord`](pacbo_core::StepRecord)
//! per time step) plus CSV summaries. Repetitions of an experiment run in
//! parallel, each with its own seed derived from a base seed.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds_table;
pub mod cli;
mod error;
pub mod experiment;
pub mod io;
pub mod oracle;

pub use error::{AppError, Result};
