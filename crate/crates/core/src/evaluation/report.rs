//! Full-dataset evaluation and per-image inspection.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{mean_std, mse, srcc};
use crate::datasets::{Dataset, FeatureRecord};
use crate::error::{F2sError, Result};
use crate::model::{ModelConfig, Prediction, EXTRA_HEAD};
use crate::training::{Checkpoint, TrainedModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadSummary {
    pub name: String,
    /// `None` when some record lacks a label for this attribute or the
    /// correlation is undefined; see `note`.
    pub srcc: Option<f64>,
    pub mse: Option<f64>,
    pub mean_score: f64,
    pub mean_contribution: f64,
    pub std_contribution: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub samples: usize,
    pub overall_srcc: Option<f64>,
    pub overall_mse: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overall_note: Option<String>,
    pub attributes: Vec<HeadSummary>,
    /// The extra head, when the model has one. It never has labels.
    pub extra: Option<HeadSummary>,
    pub model: ModelConfig,
}

impl EvaluationReport {
    /// Mean SRCC over attributes that have one.
    pub fn mean_attribute_srcc(&self) -> Option<f64> {
        let v: Vec<f64> = self.attributes.iter().filter_map(|a| a.srcc).collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    /// One row per attribute: `attribute,srcc,mse,mean_contribution`.
    /// Missing metrics are written as `NA`.
    pub fn to_csv(&self) -> String {
        let fmt = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |x| x.to_string());
        let mut out = String::from("attribute,srcc,mse,mean_contribution\n");
        for a in &self.attributes {
            writeln!(out, "{},{},{},{}", a.name, fmt(a.srcc), fmt(a.mse), a.mean_contribution).unwrap();
        }
        out
    }
}

fn correlation(pred: &[f64], truth: &[f64]) -> (Option<f64>, Option<String>) {
    match srcc(pred, truth) {
        Ok(r) => (Some(r), None),
        Err(F2sError::UndefinedCorrelation(m)) => (None, Some(format!("undefined: {m}"))),
        Err(e) => (None, Some(e.to_string())),
    }
}

fn summarize(
    name: &str,
    head: usize,
    preds: &[Prediction],
    labels: Option<Vec<f64>>,
) -> HeadSummary {
    let scores: Vec<f64> = preds.iter().map(|p| p.scores[head]).collect();
    let contribs: Vec<f64> = preds.iter().map(|p| p.contributions[head]).collect();
    let (mean_contribution, std_contribution) = mean_std(&contribs);
    let (srcc, mse, note) = match labels {
        Some(l) => {
            let (r, note) = correlation(&scores, &l);
            (r, mse(&scores, &l).ok(), note)
        }
        None => (None, None, Some("unavailable: no attribute labels".to_string())),
    };
    HeadSummary {
        name: name.to_string(),
        srcc,
        mse,
        mean_score: mean_std(&scores).0,
        mean_contribution,
        std_contribution,
        note,
    }
}

/// Predictions in record order.
pub fn predict_all(model: &TrainedModel, records: &[FeatureRecord]) -> Result<Vec<Prediction>> {
    records.par_iter().map(|r| model.predict(r)).collect()
}

/// Scores `records` with an already-loaded model. Needs at least 2 records.
pub fn evaluate_records(model: &TrainedModel, records: &[FeatureRecord]) -> Result<EvaluationReport> {
    if records.len() < 2 {
        return Err(F2sError::UndefinedCorrelation(format!(
            "evaluation needs at least 2 records, got {}",
            records.len()
        )));
    }
    let preds = predict_all(model, records)?;
    let overall: Vec<f64> = preds.iter().map(|p| p.overall).collect();
    let gt: Vec<f64> = records.iter().map(|r| r.overall).collect();
    let (overall_srcc, overall_note) = correlation(&overall, &gt);
    let config = &model.config;
    let attributes = config
        .attribute_names
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let labels: Option<Vec<f64>> = records.iter().map(|r| r.attr_labels.get(name).copied()).collect();
            summarize(name, i, &preds, labels)
        })
        .collect();
    let extra = config.include_extra.then(|| {
        let mut s = summarize(EXTRA_HEAD, config.num_attributes(), &preds, None);
        s.note = None;
        s
    });
    Ok(EvaluationReport {
        samples: records.len(),
        overall_srcc,
        overall_mse: mse(&overall, &gt)?,
        overall_note,
        attributes,
        extra,
        model: config.clone(),
    })
}

/// Evaluates a loaded manifest against a checkpoint. The manifest's
/// attribute order must equal the checkpoint's.
pub fn evaluate(dataset: &Dataset, ckpt: &Checkpoint) -> Result<EvaluationReport> {
    let model = TrainedModel::from_checkpoint(ckpt)?;
    model.check_attribute_order(&dataset.attribute_order)?;
    evaluate_records(&model, &dataset.records)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadBreakdown {
    pub name: String,
    pub score: f64,
    pub contribution: f64,
    /// `score * contribution`; these sum to `overall`.
    pub weighted: f64,
    pub distribution: Vec<f64>,
}

/// Value series for a bar plot, one entry per head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotSeries {
    pub labels: Vec<String>,
    pub scores: Vec<f64>,
    pub contributions: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Inspection {
    pub id: String,
    pub overall: f64,
    pub label: f64,
    pub contribution_sum: f64,
    pub heads: Vec<HeadBreakdown>,
    pub plot: PlotSeries,
}

pub fn inspect(model: &TrainedModel, record: &FeatureRecord) -> Result<Inspection> {
    let p = model.predict(record)?;
    let names = model.config.head_names();
    let heads: Vec<HeadBreakdown> = names
        .iter()
        .enumerate()
        .map(|(i, n)| HeadBreakdown {
            name: n.clone(),
            score: p.scores[i],
            contribution: p.contributions[i],
            weighted: p.scores[i] * p.contributions[i],
            distribution: p.distributions[i].probabilities().to_vec(),
        })
        .collect();
    Ok(Inspection {
        id: record.id.clone(),
        overall: p.overall,
        label: record.overall,
        contribution_sum: p.contributions.iter().sum(),
        plot: PlotSeries {
            labels: names,
            scores: p.scores.clone(),
            contributions: p.contributions.clone(),
        },
        heads,
    })
}
