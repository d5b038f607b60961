use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{F2sError, Result};
use crate::model::{ModelConfig, GLOBAL_FEATURE};
use crate::numerics::Tensor1;

/// One image: its global feature, named attribute features, overall label in
/// model score units, and (for evaluation or supervised training only)
/// attribute labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRecord {
    pub id: String,
    pub overall: f64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub attr_labels: BTreeMap<String, f64>,
    pub features: BTreeMap<String, Tensor1>,
}

impl FeatureRecord {
    pub fn global(&self) -> Result<&Tensor1> {
        self.feature(GLOBAL_FEATURE)
    }

    pub fn feature(&self, name: &str) -> Result<&Tensor1> {
        self.features.get(name).ok_or_else(|| {
            F2sError::data(format!("record {}: missing feature {name}", self.id))
        })
    }

    pub fn has_attribute_labels(&self) -> bool {
        !self.attr_labels.is_empty()
    }

    /// Labels in the given order, or `None` if any is missing.
    pub fn labels_for(&self, names: &[String]) -> Option<Vec<f64>> {
        names.iter().map(|n| self.attr_labels.get(n).copied()).collect()
    }

    /// Dim checks only; the label range is not inspected.
    pub fn validate_features(&self, config: &ModelConfig) -> Result<()> {
        let g = self.global()?;
        if g.len() != config.global_dim {
            return Err(F2sError::data(format!(
                "record {}: global feature has dim {}, expected {}",
                self.id,
                g.len(),
                config.global_dim
            )));
        }
        for (name, &dim) in config.attribute_names.iter().zip(&config.attribute_dims) {
            let f = self.feature(name)?;
            if f.len() != dim {
                return Err(F2sError::data(format!(
                    "record {}: attribute {name} has dim {}, expected {dim}",
                    self.id,
                    f.len()
                )));
            }
        }
        Ok(())
    }

    /// Feature dims plus the overall label range.
    pub fn validate(&self, config: &ModelConfig) -> Result<()> {
        self.validate_features(config)?;
        if !config.grid.contains_score(self.overall) {
            return Err(F2sError::data(format!(
                "record {}: overall {} outside score range [{}, {}]",
                self.id,
                self.overall,
                config.grid.min_score(),
                config.grid.max_score()
            )));
        }
        Ok(())
    }
}
