//! Minimax two-stage gradient boosting (TSGBM) estimation.
//!
//! A parametric simulator is sampled over a prior, each simulated sequence is
//! compressed to a few statistics, and a boosted tree ensemble per parameter
//! dimension learns the map from statistics back to parameters. Training uses
//! a soft-max surrogate of the worst-case squared error over the training
//! draws, which approximates a minimax estimator.

pub mod cli;
pub mod compression;
pub mod config;
pub mod crlb;
pub mod error;
pub mod gbm;
pub mod output;
pub mod pipeline;
pub mod seed;
pub mod simulators;
pub mod types;

pub use error::{Error, Result};
