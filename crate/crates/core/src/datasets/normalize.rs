//! Per-dimension z-score normalization, fitted on the training split.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::record::FeatureRecord;
use crate::error::{F2sError, Result};
use crate::numerics::Tensor1;

/// Dimensions whose spread is below this are only centred.
const MIN_STD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Normalizer {
    pub features: BTreeMap<String, FeatureStats>,
}

impl Normalizer {
    /// Population mean and standard deviation of every feature dimension.
    pub fn fit(records: &[FeatureRecord]) -> Result<Self> {
        let first = records
            .first()
            .ok_or_else(|| F2sError::data("cannot fit normalization on an empty set"))?;
        let n = records.len() as f64;
        let mut features = BTreeMap::new();
        for (name, v0) in &first.features {
            let d = v0.len();
            let mut mean = vec![0.0; d];
            for r in records {
                let v = r.feature(name)?;
                if v.len() != d {
                    return Err(F2sError::data(format!(
                        "record {}: feature {name} has dim {}, expected {d}",
                        r.id,
                        v.len()
                    )));
                }
                for (m, x) in mean.iter_mut().zip(v.iter()) {
                    *m += x;
                }
            }
            mean.iter_mut().for_each(|m| *m /= n);
            let mut var = vec![0.0; d];
            for r in records {
                for ((s, x), m) in var.iter_mut().zip(r.feature(name)?.iter()).zip(&mean) {
                    *s += (x - m) * (x - m);
                }
            }
            let std = var
                .into_iter()
                .map(|s| (s / n).sqrt())
                .map(|s| if s < MIN_STD { 1.0 } else { s })
                .collect();
            features.insert(name.clone(), FeatureStats { mean, std });
        }
        Ok(Normalizer { features })
    }

    pub fn apply(&self, record: &FeatureRecord) -> Result<FeatureRecord> {
        let mut out = record.clone();
        for (name, stats) in &self.features {
            let v = out.features.get_mut(name).ok_or_else(|| {
                F2sError::data(format!("record {}: missing feature {name}", record.id))
            })?;
            if v.len() != stats.mean.len() {
                return Err(F2sError::data(format!(
                    "record {}: feature {name} has dim {}, normalization expects {}",
                    record.id,
                    v.len(),
                    stats.mean.len()
                )));
            }
            let z = v.iter().zip(&stats.mean).zip(&stats.std).map(|((x, m), s)| (x - m) / s).collect();
            *v = Tensor1::new(z);
        }
        Ok(out)
    }

    pub fn apply_all(&self, records: &[FeatureRecord]) -> Result<Vec<FeatureRecord>> {
        records.iter().map(|r| self.apply(r)).collect()
    }
}
