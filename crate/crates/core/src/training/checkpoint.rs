//! Versioned JSON checkpoints.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::TrainConfig;
use crate::datasets::{FeatureRecord, Normalizer};
use crate::error::{F2sError, Result};
use crate::model::{forward_full, BucketGrid, F2SParams, ModelConfig, Prediction};
use crate::numerics::ParamStore;

pub const CHECKPOINT_FORMAT: &str = "f2s-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedArray {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    /// Mean per-sample training loss over the epoch.
    pub train_loss: f64,
    pub val_mse: f64,
    /// Learning rate used during the epoch.
    pub lr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub model: ModelConfig,
    pub attribute_order: Vec<String>,
    pub grid: BucketGrid,
    pub params: Vec<NamedArray>,
    pub normalization: Option<Normalizer>,
    pub train: TrainConfig,
    pub history: Vec<EpochRecord>,
    pub seed: u64,
}

impl Checkpoint {
    pub fn new(
        model: &ModelConfig,
        params: &F2SParams,
        normalization: Option<Normalizer>,
        train: &TrainConfig,
        history: Vec<EpochRecord>,
    ) -> Self {
        let store = &params.store;
        let params = store
            .ids()
            .map(|id| NamedArray {
                name: store.name(id).to_string(),
                shape: store.shape(id).to_vec(),
                values: store.values(id).iter().map(|&v| v as f32).collect(),
            })
            .collect();
        Checkpoint {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            model: model.clone(),
            attribute_order: model.attribute_names.clone(),
            grid: model.grid.clone(),
            params,
            normalization,
            train: train.clone(),
            history,
            seed: train.seed,
        }
    }

    /// Rebuilds the parameter tensors, checking names, shapes and lengths.
    pub fn params(&self) -> Result<F2SParams> {
        let mut store = ParamStore::new();
        for a in &self.params {
            let n: usize = a.shape.iter().product();
            if a.values.len() != n {
                return Err(F2sError::data(format!(
                    "checkpoint array {} has {} values, shape {:?} needs {n}",
                    a.name,
                    a.values.len(),
                    a.shape
                )));
            }
            store.add(a.name.clone(), a.shape.clone(), a.values.iter().map(|&v| v as f64).collect())?;
        }
        F2SParams::from_store(&self.model, store).map_err(|e| F2sError::data(format!("checkpoint: {e}")))
    }

    pub fn validate(&self) -> Result<()> {
        if self.format != CHECKPOINT_FORMAT {
            return Err(F2sError::data(format!("not a checkpoint (format {:?})", self.format)));
        }
        if self.version != CHECKPOINT_VERSION {
            return Err(F2sError::data(format!(
                "checkpoint version {} is not supported (expected {CHECKPOINT_VERSION})",
                self.version
            )));
        }
        self.model.validate()?;
        if self.attribute_order != self.model.attribute_names {
            return Err(F2sError::data("checkpoint attribute order disagrees with its model config"));
        }
        if self.grid != self.model.grid {
            return Err(F2sError::data("checkpoint grid disagrees with its model config"));
        }
        self.params().map(|_| ())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("checkpoint serializes") + "\n"
    }

    pub fn from_json(text: &str, path: &Path) -> Result<Self> {
        let json_err = |source| F2sError::Json {
            path: path.to_path_buf(),
            source,
        };
        let value: serde_json::Value = serde_json::from_str(text).map_err(json_err)?;
        // report a version mismatch before any schema complaint
        if let Some(v) = value.get("version").and_then(|v| v.as_u64()) {
            if v != CHECKPOINT_VERSION as u64 {
                return Err(F2sError::data(format!(
                    "{}: checkpoint version {v} is not supported (expected {CHECKPOINT_VERSION})",
                    path.display()
                )));
            }
        }
        let ckpt: Checkpoint = serde_json::from_value(value).map_err(json_err)?;
        ckpt.validate()
            .map_err(|e| F2sError::data(format!("{}: {e}", path.display())))?;
        Ok(ckpt)
    }
}

pub fn save_checkpoint(path: impl AsRef<Path>, ckpt: &Checkpoint) -> Result<()> {
    let path = path.as_ref();
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| F2sError::io(parent, e))?;
    }
    fs::write(path, ckpt.to_json()).map_err(|e| F2sError::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| F2sError::io(path, e))?;
    Checkpoint::from_json(&text, path)
}

/// A checkpoint ready for inference.
#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub config: ModelConfig,
    pub params: F2SParams,
    pub normalization: Option<Normalizer>,
}

impl TrainedModel {
    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        Ok(TrainedModel {
            config: ckpt.model.clone(),
            params: ckpt.params()?,
            normalization: ckpt.normalization.clone(),
        })
    }

    /// Errors unless `order` is exactly the model's attribute order.
    pub fn check_attribute_order(&self, order: &[String]) -> Result<()> {
        if order != self.config.attribute_names.as_slice() {
            return Err(F2sError::data(format!(
                "manifest attribute order {order:?} does not match checkpoint order {:?}",
                self.config.attribute_names
            )));
        }
        Ok(())
    }

    pub fn prepare(&self, record: &FeatureRecord) -> Result<FeatureRecord> {
        record.validate_features(&self.config)?;
        match &self.normalization {
            Some(n) => n.apply(record),
            None => Ok(record.clone()),
        }
    }

    pub fn predict(&self, record: &FeatureRecord) -> Result<Prediction> {
        forward_full(&self.prepare(record)?, &self.params, &self.config)
    }
}
