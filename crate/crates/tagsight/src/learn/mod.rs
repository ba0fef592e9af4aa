//! From-scratch learners: a bagged random-forest classifier and a
//! feedforward network trained with Adam, plus versioned model files.

pub mod forest;
mod io;
pub mod mlp;

pub use forest::{
    oob_score, predict_forest, predict_proba, train_forest, DecisionTree, ForestHyperparams,
    ForestModel, TreeNode,
};
pub use io::{deserialize_model, load_model, save_model, serialize_model, SavedModel, SCHEMA_VERSION};
pub use mlp::{forward, gradient_check, one_hot, param_count, train_mlp, MlpHyperparams, MlpModel};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LearnError {
    #[error("empty training set")]
    EmptyTrainingSet,
    #[error("invalid hyperparameters: {0}")]
    InvalidHyperparams(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("training diverged: loss became non-finite at epoch {0}")]
    DivergedNaN(usize),
    #[error("model file: {0}")]
    ModelFile(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A labeled dataset: one feature row per sample, class indices as targets.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<usize>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.x.first().map_or(0, Vec::len)
    }
}

/// Per-epoch training curve entry for iterative learners.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub val_loss: f64,
    pub val_accuracy: f64,
}

/// Summary of one training run. Forest runs fill `oob_score` and leave the
/// epoch curve empty; network runs fill the curve and `stopping_epoch`.
/// Validation/test accuracy are filled in by the caller that owns those
/// splits.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub train_accuracy: f64,
    pub validation_accuracy: Option<f64>,
    pub test_accuracy: Option<f64>,
    pub oob_score: Option<f64>,
    pub stopping_epoch: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub epochs: Vec<EpochStats>,
}
