//! Multilevel Monte Carlo over a stack of level models that share one scenario
//! space.
//!
//! The estimator sums per-level contributions `r_l = E[X_l - X_{l-1}]`, each
//! estimated from independent coupled samples, and splits a cost budget across
//! levels to minimise the estimator variance.

pub mod allocation;
pub mod engine;
pub mod error;
pub mod model;
pub mod outcome;
pub mod seed;
pub mod speed;
pub mod stats;

pub use allocation::{equal_split_allocation, estimator_variance, optimal_allocation, optimal_allocation_real};
pub use engine::{
    run_fixed, run_mlmc, sample_level_pair, Budget, LevelEstimate, LevelPairSample, MetricEstimate, MlmcConfig,
    MlmcEstimate,
};
pub use error::MlmcError;
pub use model::{Fingerprint, LevelModel, ModelError, ScenarioSource};
pub use outcome::{Metric, OutcomeVector};
pub use speed::{speed_measure, Speed};
pub use stats::{LevelStats, PairMoments};
