//! Versioned JSON model files.
//!
//! Every file carries `model_kind` and `schema_version`. Floats are written
//! in shortest round-trip form, so a deserialized model predicts bit-
//! identically to the one serialized.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ForestModel, LearnError, MlpModel};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model_kind", rename_all = "snake_case")]
pub enum SavedModel {
    Forest {
        schema_version: u32,
        model: ForestModel,
    },
    Mlp {
        schema_version: u32,
        model: MlpModel,
    },
}

impl SavedModel {
    pub fn forest(model: ForestModel) -> SavedModel {
        SavedModel::Forest {
            schema_version: SCHEMA_VERSION,
            model,
        }
    }

    pub fn mlp(model: MlpModel) -> SavedModel {
        SavedModel::Mlp {
            schema_version: SCHEMA_VERSION,
            model,
        }
    }

    fn version(&self) -> u32 {
        match self {
            SavedModel::Forest { schema_version, .. } | SavedModel::Mlp { schema_version, .. } => {
                *schema_version
            }
        }
    }
}

pub fn serialize_model(model: &SavedModel) -> Result<String, LearnError> {
    Ok(serde_json::to_string(model)?)
}

pub fn deserialize_model(json: &str) -> Result<SavedModel, LearnError> {
    let model: SavedModel = serde_json::from_str(json)?;
    if model.version() != SCHEMA_VERSION {
        return Err(LearnError::ModelFile(format!(
            "unsupported schema_version {} (expected {SCHEMA_VERSION})",
            model.version()
        )));
    }
    Ok(model)
}

pub fn save_model(model: &SavedModel, path: &Path) -> Result<(), LearnError> {
    std::fs::write(path, serialize_model(model)? + "\n")?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<SavedModel, LearnError> {
    let text = std::fs::read_to_string(path)?;
    deserialize_model(&text)
}
