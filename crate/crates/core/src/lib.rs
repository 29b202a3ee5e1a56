//! Benchmarking optimizers by how easy they are to tune.
//!
//! A trial library holds random-search results for one optimizer on one
//! task. From it the [`estimator`] module computes the expected best
//! objective at every search budget, exactly and by bootstrap, and
//! [`aggregate`] condenses those curves into tunability scores.

// Negated comparisons below are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aggregate;
pub mod error;
pub mod hpo;
pub mod estimator;
pub mod optim;
pub mod priors;
pub mod rng;
pub mod tasks;
pub mod types;

pub use error::{Error, Result};
pub use types::{
    better, incumbents, to_score, BudgetCurve, Direction, HyperparameterConfig, IncumbentTrace,
    Quartiles, Trial, TrialLibrary,
};
