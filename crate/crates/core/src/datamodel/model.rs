//! Serialized one-vs-all model.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::types::{FeatureLayout, SentimentLabel};
use crate::error::{Error, Result};
use crate::features::NormalizationConfig;

pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    #[serde(rename = "C")]
    pub c: f64,
    /// `auto`, `uniform` or `manual`.
    pub class_weight_mode: String,
    /// Resolved per-class multipliers in `classes` order.
    pub class_weights: Vec<f64>,
    pub tolerance: f64,
    pub max_epochs: usize,
    pub seed: u64,
    pub bias_scale: f64,
}

/// Per-class solver outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverDiagnostics {
    pub epochs: usize,
    pub converged: bool,
    pub kkt_violation: f64,
    pub dual_objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub version: u32,
    pub classes: Vec<SentimentLabel>,
    pub feature_dims: FeatureLayout,
    pub weight_vectors: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
    pub hyperparams: Hyperparams,
    pub normalization_config: NormalizationConfig,
    pub anp_catalog_hash: String,
    #[serde(default)]
    pub diagnostics: Vec<SolverDiagnostics>,
}

impl SvmModel {
    pub fn dim(&self) -> usize {
        self.feature_dims.fused()
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != MODEL_VERSION {
            return Err(Error::UnsupportedVersion {
                what: "model",
                found: self.version as u64,
                expected: MODEL_VERSION as u64,
            });
        }
        if self.classes != SentimentLabel::ALL {
            return Err(Error::Invariant(format!(
                "model classes must be {:?}, found {:?}",
                SentimentLabel::ALL,
                self.classes
            )));
        }
        if self.weight_vectors.len() != 3 || self.biases.len() != 3 {
            return Err(Error::Invariant(format!(
                "model needs 3 weight vectors and 3 biases, found {} and {}",
                self.weight_vectors.len(),
                self.biases.len()
            )));
        }
        for w in &self.weight_vectors {
            if w.len() != self.dim() {
                return Err(Error::DimMismatch {
                    expected: self.dim(),
                    found: w.len(),
                });
            }
        }
        Ok(())
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::parse("model", e))?;
        let version = value
            .get("version")
            .and_then(|v| v.as_u64())
            .ok_or_else(|| Error::parse("model", "missing integer `version`"))?;
        if version != MODEL_VERSION as u64 {
            return Err(Error::UnsupportedVersion {
                what: "model",
                found: version,
                expected: MODEL_VERSION as u64,
            });
        }
        let model: SvmModel =
            serde_json::from_value(value).map_err(|e| Error::parse("model", e))?;
        model.validate()?;
        Ok(model)
    }
}

/// Non-fatal conditions surfaced by [`load_model`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModelWarning {
    CatalogMismatch { model: String, expected: String },
}

impl std::fmt::Display for ModelWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ModelWarning::CatalogMismatch { model, expected } => write!(
                f,
                "model was trained with ANP catalog {model} but catalog {expected} is in use"
            ),
        }
    }
}

pub fn save_model(model: &SvmModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut text = model.to_json_string();
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Load a model; when `catalog_hash` is given and differs from the one the
/// model was trained with, a [`ModelWarning::CatalogMismatch`] is returned
/// alongside the model.
pub fn load_model(
    path: impl AsRef<Path>,
    catalog_hash: Option<&str>,
) -> Result<(SvmModel, Vec<ModelWarning>)> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let model = SvmModel::from_json_str(&text)?;
    let mut warnings = Vec::new();
    if let Some(expected) = catalog_hash {
        if !expected.eq_ignore_ascii_case(&model.anp_catalog_hash) {
            warnings.push(ModelWarning::CatalogMismatch {
                model: model.anp_catalog_hash.clone(),
                expected: expected.to_string(),
            });
        }
    }
    Ok((model, warnings))
}
