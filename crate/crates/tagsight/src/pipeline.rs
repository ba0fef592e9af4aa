//! The unified inference pipeline: orientation classification, occlusion-
//! driven tag selection, then material classification with the side or rear
//! network.
//!
//! Orientation mispredictions propagate by design: the selected tag and
//! material classifier follow the *predicted* state, and any resulting
//! material error simply counts against end-to-end accuracy.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{assemble_material, assemble_orientation, FeatureError, FeatureWindow};
use crate::learn::{forward, load_model, predict_proba, ForestModel, LearnError, MlpModel, SavedModel};
use crate::sim::{MaterialClass, OrientationState, TagRole};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid orientation state {0}")]
    InvalidState(u8),
    #[error("n_tags must be 2 or 3, got {0}")]
    InvalidTagCount(u8),
    #[error("model mismatch: {0}")]
    ModelMismatch(String),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Learn(#[from] LearnError),
    #[error("bundle: {0}")]
    Bundle(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Which material classifier a selected tag feeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClassifierKind {
    /// Tag on a face perpendicular to the reader.
    Side,
    /// Tag on the face opposite the reader.
    Rear,
}

/// The tag and classifier chosen for a predicted orientation state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionOutcome {
    pub tag: TagRole,
    pub classifier: ClassifierKind,
}

/// Selection logic: for each orientation state, the tag with the greatest
/// occlusion and the classifier matching its position. With two tags,
/// state 5 falls back to Tag2 on its perpendicular face.
pub fn select_tag(state: OrientationState, n_tags: u8) -> Result<SelectionOutcome, PipelineError> {
    if n_tags != 2 && n_tags != 3 {
        return Err(PipelineError::InvalidTagCount(n_tags));
    }
    use ClassifierKind::{Rear, Side};
    use TagRole::{Tag1, Tag2, Tag3};
    let (tag, classifier) = match (state.id(), n_tags) {
        (0, _) => (Tag2, Side),
        (1, _) => (Tag2, Rear),
        (2, _) => (Tag1, Rear),
        (3, _) => (Tag1, Side),
        (4, _) => (Tag2, Side),
        (5, 3) => (Tag3, Rear),
        (5, 2) => (Tag2, Side),
        (id, _) => return Err(PipelineError::InvalidState(id)),
    };
    Ok(SelectionOutcome { tag, classifier })
}

/// The three models of one pipeline variant.
#[derive(Debug, Clone)]
pub struct PipelineModels {
    pub orientation: ForestModel,
    pub side: MlpModel,
    pub rear: MlpModel,
    pub n_tags: u8,
}

impl PipelineModels {
    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.n_tags != 2 && self.n_tags != 3 {
            return Err(PipelineError::InvalidTagCount(self.n_tags));
        }
        let expected = 2 * self.n_tags as usize;
        if self.orientation.n_features != expected {
            return Err(PipelineError::ModelMismatch(format!(
                "orientation model expects {} features, pipeline needs {expected}",
                self.orientation.n_features
            )));
        }
        for (name, mlp) in [("side", &self.side), ("rear", &self.rear)] {
            if mlp.n_inputs() != 4 || mlp.n_outputs() != MaterialClass::ALL.len() {
                return Err(PipelineError::ModelMismatch(format!(
                    "{name} material model must map 4 features to {} classes",
                    MaterialClass::ALL.len()
                )));
            }
        }
        Ok(())
    }
}

/// Inference output for one window: both stage distributions are surfaced
/// so downstream consumers can threshold on confidence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineResult {
    pub state: OrientationState,
    pub state_distribution: Vec<f64>,
    pub selection: SelectionOutcome,
    pub material: MaterialClass,
    pub material_distribution: Vec<f64>,
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Run the full pipeline on one window.
pub fn infer(window: &FeatureWindow, models: &PipelineModels) -> Result<PipelineResult, PipelineError> {
    let features = assemble_orientation(window, models.n_tags)?;
    let state_distribution = predict_proba(&models.orientation, &features);
    let state = OrientationState::new(argmax(&state_distribution) as u8)
        .map_err(|_| PipelineError::InvalidState(argmax(&state_distribution) as u8))?;

    let selection = select_tag(state, models.n_tags)?;
    // Missing selected-tag features propagate as an error, never silently
    // imputed here.
    let material_vec = assemble_material(window, selection.tag)?;
    let mlp = match selection.classifier {
        ClassifierKind::Side => &models.side,
        ClassifierKind::Rear => &models.rear,
    };
    let material_distribution = forward(mlp, &material_vec);
    let material = MaterialClass::ALL[argmax(&material_distribution)];

    Ok(PipelineResult {
        state,
        state_distribution,
        selection,
        material,
        material_distribution,
    })
}

/// Aggregate accuracy over a labeled batch.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub n_windows: usize,
    /// Fraction of windows with labels.
    pub n_labeled: usize,
    pub orientation_accuracy: Option<f64>,
    pub material_accuracy: Option<f64>,
}

/// Run the pipeline over many windows; labels, when present, feed the
/// summary accuracies.
pub fn infer_batch(
    windows: &[FeatureWindow],
    models: &PipelineModels,
) -> Result<(Vec<PipelineResult>, BatchSummary), PipelineError> {
    models.validate()?;
    let mut results = Vec::with_capacity(windows.len());
    let mut labeled = 0usize;
    let mut state_hits = 0usize;
    let mut material_hits = 0usize;
    for window in windows {
        let result = infer(window, models)?;
        if let (Some(material), Some(state)) = (window.material, window.state) {
            labeled += 1;
            if result.state == state {
                state_hits += 1;
            }
            if result.material == material {
                material_hits += 1;
            }
        }
        results.push(result);
    }
    let summary = BatchSummary {
        n_windows: windows.len(),
        n_labeled: labeled,
        orientation_accuracy: (labeled > 0).then(|| state_hits as f64 / labeled as f64),
        material_accuracy: (labeled > 0).then(|| material_hits as f64 / labeled as f64),
    };
    Ok((results, summary))
}

/// Manifest naming the three model files of a pipeline variant. Paths are
/// relative to the manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleManifest {
    pub schema_version: u32,
    pub n_tags: u8,
    pub orientation_model: String,
    pub side_model: String,
    pub rear_model: String,
}

impl BundleManifest {
    pub fn save(&self, path: &Path) -> Result<(), PipelineError> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}

/// Load a bundle manifest and the three models it names.
pub fn load_bundle(path: &Path) -> Result<PipelineModels, PipelineError> {
    let text = std::fs::read_to_string(path)?;
    let manifest: BundleManifest = serde_json::from_str(&text)?;
    if manifest.schema_version != crate::learn::SCHEMA_VERSION {
        return Err(PipelineError::Bundle(format!(
            "unsupported bundle schema_version {}",
            manifest.schema_version
        )));
    }
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let forest = match load_model(&dir.join(&manifest.orientation_model))? {
        SavedModel::Forest { model, .. } => model,
        SavedModel::Mlp { .. } => {
            return Err(PipelineError::Bundle(
                "orientation_model is not a forest".into(),
            ))
        }
    };
    let mlp = |name: &str| -> Result<MlpModel, PipelineError> {
        match load_model(&dir.join(name))? {
            SavedModel::Mlp { model, .. } => Ok(model),
            SavedModel::Forest { .. } => {
                Err(PipelineError::Bundle(format!("{name} is not an mlp")))
            }
        }
    };
    let models = PipelineModels {
        orientation: forest,
        side: mlp(&manifest.side_model)?,
        rear: mlp(&manifest.rear_model)?,
        n_tags: manifest.n_tags,
    };
    models.validate()?;
    Ok(models)
}
