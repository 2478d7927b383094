//! Policy evaluation: seeded suites, closed-loop runs, success-rate reports
//! and the sim:real scaling comparison.

pub mod knn;
pub mod policy;
pub mod run;
pub mod scaling;
pub mod suite;

use thiserror::Error;

use crate::dataset::{MixError, StoreError};

pub use knn::{knn_bc_policy, KnnIndex, KnnPolicy};
pub use policy::{stop_tokens, EpisodeContext, OraclePolicy, Policy, RandomPolicy};
pub use run::{run_episode, run_suite, EpisodeResult, EvalReport, FailureKind, TaskReport};
pub use scaling::{knn_factory, scaling_experiment, ScalingRow, ScalingTable};
pub use suite::{make_unseen_suites, EvalSuite, SuiteEntry, SEEN_BUDGETS};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("unknown suite `{0}`")]
    UnknownSuite(String),
    #[error("invalid suite: {0}")]
    InvalidSuite(String),
    #[error("training set has no successful episodes")]
    EmptyTrainingSet,
    #[error("k = {k} must be between 1 and the {available} training episodes")]
    BadK { k: usize, available: usize },
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Mix(#[from] MixError),
}
