//! Retrain-per-variant ablation.

use serde::{Deserialize, Serialize};

use super::report::{evaluate_records, EvaluationReport};
use super::views::{parse_view, view_config, view_records, Complete, FeatureView, NoAttributes, WithoutAttribute};
use crate::datasets::FeatureRecord;
use crate::error::Result;
use crate::model::ModelConfig;
use crate::training::{train, Checkpoint, TrainConfig, TrainedModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub variant: String,
    pub overall_srcc: Option<f64>,
    /// Per attribute, in model order.
    pub attribute_srcc: Vec<Option<f64>>,
    pub mean_attribute_srcc: Option<f64>,
    pub report: EvaluationReport,
}

/// Trains on the `view` of `train_records` from scratch with `train_cfg`
/// and evaluates on the same view of `test_records`.
pub fn ablate(
    train_records: &[FeatureRecord],
    test_records: &[FeatureRecord],
    model: &ModelConfig,
    train_cfg: &TrainConfig,
    view: &dyn FeatureView,
) -> Result<(AblationRow, Checkpoint)> {
    let names = &model.attribute_names;
    let config = view_config(view, model);
    let train_view = view_records(view, train_records, names)?;
    let test_view = view_records(view, test_records, names)?;
    let ckpt = train(&train_view, None, &config, train_cfg)?;
    let report = evaluate_records(&TrainedModel::from_checkpoint(&ckpt)?, &test_view)?;
    let row = AblationRow {
        variant: view.name(),
        overall_srcc: report.overall_srcc,
        attribute_srcc: report.attributes.iter().map(|a| a.srcc).collect(),
        mean_attribute_srcc: report.mean_attribute_srcc(),
        report,
    };
    Ok((row, ckpt))
}

/// `ablate` with the variant given as `complete`, `none` or `attr:<name>`.
pub fn ablate_variant(
    train_records: &[FeatureRecord],
    test_records: &[FeatureRecord],
    model: &ModelConfig,
    train_cfg: &TrainConfig,
    variant: &str,
) -> Result<(AblationRow, Checkpoint)> {
    let view = parse_view(variant, &model.attribute_names)?;
    ablate(train_records, test_records, model, train_cfg, view.as_ref())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationEntry {
    pub attribute: String,
    pub complete: Option<f64>,
    /// This attribute's SRCC when only its own features are replaced.
    pub ablated: Option<f64>,
    pub none: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub entries: Vec<AblationEntry>,
    pub mean_complete: Option<f64>,
    pub mean_none: Option<f64>,
}

/// Complete, none, and one run per attribute, all with the same config.
pub fn ablation_table(
    train_records: &[FeatureRecord],
    test_records: &[FeatureRecord],
    model: &ModelConfig,
    train_cfg: &TrainConfig,
) -> Result<AblationReport> {
    let run = |v: &dyn FeatureView| ablate(train_records, test_records, model, train_cfg, v).map(|r| r.0);
    let complete = run(&Complete)?;
    let none = run(&NoAttributes)?;
    let mut entries = Vec::new();
    for (i, name) in model.attribute_names.iter().enumerate() {
        let ablated = run(&WithoutAttribute(name.clone()))?;
        entries.push(AblationEntry {
            attribute: name.clone(),
            complete: complete.attribute_srcc[i],
            ablated: ablated.attribute_srcc[i],
            none: none.attribute_srcc[i],
        });
    }
    Ok(AblationReport {
        entries,
        mean_complete: complete.mean_attribute_srcc,
        mean_none: none.mean_attribute_srcc,
    })
}
