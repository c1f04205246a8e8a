//! Regression-stump boosting: the weak learner, per-round candidate fitting
//! across feature dimensions, and the strong classifier it produces.

mod classifier;
mod stump;
mod train;

use thiserror::Error;

use crate::haar::IndexVersion;

pub use classifier::{classify, eval_strong_raw, StrongClassifier};
pub use stump::{
    eval_stump, fit_stump_dimension, fit_stump_dimension_detailed, heaviside, sign, Stump,
    StumpFit,
};
pub use train::{
    adaboost_round, best_candidate, score_patches, train_adaboost, train_on_matrix, BoostState,
    FeatureMatrix, RoundRecord, StopReason, TrainConfig, TrainingOutcome,
};

#[derive(Debug, Error)]
pub enum BoostError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("training data contains a single class")]
    SingleClass,
    #[error("classifier expects feature index {classifier}, features come from {features}")]
    VersionMismatch {
        classifier: IndexVersion,
        features: IndexVersion,
    },
    #[error("boosting diverged: {0}")]
    Divergence(String),
    #[error("no stump beats chance in round {round} (weighted error {weighted_error})")]
    NoWeakLearner { round: usize, weighted_error: f64 },
    #[error("classifier file line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("i/o error: {0}")]
    Io(#[source] std::io::Error),
}
