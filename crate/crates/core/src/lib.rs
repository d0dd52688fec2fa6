//! Goldbach-function workbench.
//!
//! Generates exact partition counts for even numbers (the "comet"
//! dataset), implements the classical analytic estimators, trains a
//! fully-connected regression network on multi-base digit features, and
//! searches digit space for hypothetical conjecture violators, realizing
//! candidates as integers with the Chinese Remainder Theorem.
//!
//! Data-parallel sections run on rayon under the default `parallel`
//! feature and fall back to single-threaded loops without it. All
//! reductions combine fixed-size chunks in a fixed order, so outputs are
//! byte-identical across thread counts and across the two builds.

pub mod dataset;
pub mod error;
pub mod estimators;
pub mod evaluation;
pub mod features;
pub mod neuralnet;
mod par;
pub mod partitions;
pub mod primes;
pub mod rng;
pub mod search;

pub use error::{Error, Result};
pub use par::{is_parallel, set_max_threads};
