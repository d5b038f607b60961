//! Training objectives, registered by name.
//!
//! Each objective turns a taped forward pass into a scalar loss node. The
//! builtin registry holds `semi` (overall labels only, attribute scores shaped
//! by the learnable prior) and `supervised` (direct attribute-label
//! regression). Extra objectives can be registered at runtime.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::config::BucketGrid;
use super::forward::{prior_weights_taped, Prediction, PredictionNodes};
use super::params::F2SParams;
use crate::error::{F2sError, Result};
use crate::numerics::{NodeId, Tape, Tensor1};

/// What the attribute term of the semi-supervised loss aims `S_i·C_i` at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PriorTarget {
    /// `S_overall·w_i` with `S_overall` the prediction, gradient stopped.
    #[default]
    Predicted,
    /// `GT_overall·w_i`.
    GroundTruth,
}

impl std::str::FromStr for PriorTarget {
    type Err = F2sError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "predicted" => Ok(PriorTarget::Predicted),
            "ground-truth" => Ok(PriorTarget::GroundTruth),
            other => Err(F2sError::config(format!(
                "unknown prior target {other:?} (expected predicted or ground-truth)"
            ))),
        }
    }
}

/// Per-sample quantities an objective may need besides the prediction.
#[derive(Debug, Clone, Copy)]
pub struct LossInputs<'a> {
    pub gt_overall: f64,
    /// Labels for the `A` real attributes in config order, if known.
    pub gt_attributes: Option<&'a [f64]>,
    pub lambda: f64,
    pub sigma: f64,
    pub target: PriorTarget,
    /// Replaces the gradient-stopped predicted overall with a fixed value.
    /// Finite-difference checks need this: the stopped anchor is a constant
    /// of the linearization, not of the perturbed function.
    pub frozen_anchor: Option<f64>,
    pub grid: &'a BucketGrid,
}

#[derive(Debug, Clone, Copy)]
pub struct LossNodes {
    pub total: NodeId,
    pub overall_term: NodeId,
    pub attribute_term: NodeId,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub overall_term: f64,
    pub attribute_term: f64,
    pub total: f64,
}

impl LossNodes {
    pub fn read(&self, tape: &Tape<'_>) -> LossBreakdown {
        LossBreakdown {
            overall_term: tape.scalar(self.overall_term),
            attribute_term: tape.scalar(self.attribute_term),
            total: tape.scalar(self.total),
        }
    }
}

pub trait Objective: Send + Sync {
    fn name(&self) -> &'static str;

    fn requires_attribute_labels(&self) -> bool {
        false
    }

    fn build(
        &self,
        tape: &mut Tape<'_>,
        params: &F2SParams,
        pred: &PredictionNodes,
        inputs: &LossInputs<'_>,
    ) -> Result<LossNodes>;
}

impl fmt::Debug for dyn Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Objective({})", self.name())
    }
}

fn check_gt(gt: f64, grid: &BucketGrid) -> Result<()> {
    if !gt.is_finite() || !grid.contains_score(gt) {
        return Err(F2sError::data(format!(
            "overall label {gt} outside score range [{}, {}]",
            grid.min_score(),
            grid.max_score()
        )));
    }
    Ok(())
}

fn overall_term(tape: &mut Tape<'_>, pred: &PredictionNodes, gt: f64) -> Result<NodeId> {
    let target = tape.input(vec![gt]);
    tape.mse(pred.overall, target)
}

fn combine(tape: &mut Tape<'_>, overall: NodeId, attribute: NodeId, lambda: f64) -> Result<LossNodes> {
    let weighted = tape.scale(attribute, lambda);
    let total = tape.add(overall, weighted)?;
    Ok(LossNodes {
        total,
        overall_term: overall,
        attribute_term: attribute,
    })
}

/// `(S_overall − GT)² + λ Σ_i (S_i·C_i − S_overall·w_i)²`
#[derive(Debug, Default, Clone, Copy)]
pub struct SemiSupervised;

impl Objective for SemiSupervised {
    fn name(&self) -> &'static str {
        "semi"
    }

    fn build(
        &self,
        tape: &mut Tape<'_>,
        params: &F2SParams,
        pred: &PredictionNodes,
        inputs: &LossInputs<'_>,
    ) -> Result<LossNodes> {
        check_gt(inputs.gt_overall, inputs.grid)?;
        let l_overall = overall_term(tape, pred, inputs.gt_overall)?;

        let weighted_scores = tape.mul(pred.score_vec, pred.contributions)?;
        let w = prior_weights_taped(tape, params, inputs.sigma);
        let anchor = match inputs.target {
            PriorTarget::Predicted => match inputs.frozen_anchor {
                Some(v) => tape.input(vec![v]),
                None => tape.stop_gradient(pred.overall),
            },
            PriorTarget::GroundTruth => tape.input(vec![inputs.gt_overall]),
        };
        let target = tape.mul_scalar(w, anchor)?;
        let diff = tape.sub(weighted_scores, target)?;
        let l_attr = tape.sum_squares(diff);
        combine(tape, l_overall, l_attr, inputs.lambda)
    }
}

/// `(S_overall − GT)² + λ Σ_{i≤A} (S_i − GT_i)²`; the extra head is unlabeled.
#[derive(Debug, Default, Clone, Copy)]
pub struct Supervised;

impl Objective for Supervised {
    fn name(&self) -> &'static str {
        "supervised"
    }

    fn requires_attribute_labels(&self) -> bool {
        true
    }

    fn build(
        &self,
        tape: &mut Tape<'_>,
        _params: &F2SParams,
        pred: &PredictionNodes,
        inputs: &LossInputs<'_>,
    ) -> Result<LossNodes> {
        check_gt(inputs.gt_overall, inputs.grid)?;
        let labels = inputs
            .gt_attributes
            .ok_or_else(|| F2sError::data("supervised loss needs attribute labels"))?;
        if labels.len() > pred.scores.len() {
            return Err(F2sError::data(format!(
                "{} attribute labels for {} heads",
                labels.len(),
                pred.scores.len()
            )));
        }
        let l_overall = overall_term(tape, pred, inputs.gt_overall)?;
        let labeled: Vec<NodeId> = pred.scores[..labels.len()].to_vec();
        let scores = tape.concat(&labeled);
        let gt = tape.input(labels.to_vec());
        let diff = tape.sub(scores, gt)?;
        let l_attr = tape.sum_squares(diff);
        combine(tape, l_overall, l_attr, inputs.lambda)
    }
}

/// Name-keyed set of objectives.
#[derive(Clone)]
pub struct ObjectiveRegistry {
    entries: Vec<Arc<dyn Objective>>,
}

impl ObjectiveRegistry {
    pub fn empty() -> Self {
        ObjectiveRegistry { entries: Vec::new() }
    }

    pub fn with_builtins() -> Self {
        let mut r = ObjectiveRegistry::empty();
        r.register(Arc::new(SemiSupervised)).expect("fresh registry");
        r.register(Arc::new(Supervised)).expect("fresh registry");
        r
    }

    pub fn register(&mut self, objective: Arc<dyn Objective>) -> Result<()> {
        if self.entries.iter().any(|e| e.name() == objective.name()) {
            return Err(F2sError::config(format!(
                "objective {} is already registered",
                objective.name()
            )));
        }
        self.entries.push(objective);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn Objective>> {
        self.entries
            .iter()
            .find(|e| e.name() == name)
            .cloned()
            .ok_or_else(|| {
                F2sError::config(format!(
                    "unknown training mode {name:?} (available: {})",
                    self.names().join(", ")
                ))
            })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|e| e.name()).collect()
    }
}

impl Default for ObjectiveRegistry {
    fn default() -> Self {
        ObjectiveRegistry::with_builtins()
    }
}

/// Value-level semi-supervised loss on a finished prediction.
pub fn loss_semi(
    pred: &Prediction,
    gt_overall: f64,
    w: &Tensor1,
    lambda: f64,
    target: PriorTarget,
    grid: &BucketGrid,
) -> Result<LossBreakdown> {
    check_gt(gt_overall, grid)?;
    let n = pred.scores.len();
    if pred.contributions.len() != n || w.len() != n {
        return Err(F2sError::config("scores, contributions and prior weights differ in length"));
    }
    let anchor = match target {
        PriorTarget::Predicted => pred.overall,
        PriorTarget::GroundTruth => gt_overall,
    };
    let overall_term = (pred.overall - gt_overall).powi(2);
    let attribute_term = (0..n)
        .map(|i| (pred.scores[i] * pred.contributions[i] - anchor * w[i]).powi(2))
        .sum::<f64>();
    Ok(LossBreakdown {
        overall_term,
        attribute_term,
        total: overall_term + lambda * attribute_term,
    })
}

/// Value-level supervised loss; `gt_attrs` covers the leading `A` heads.
pub fn loss_supervised(
    pred: &Prediction,
    gt_overall: f64,
    gt_attrs: &[f64],
    lambda: f64,
    grid: &BucketGrid,
) -> Result<LossBreakdown> {
    check_gt(gt_overall, grid)?;
    if gt_attrs.len() > pred.scores.len() {
        return Err(F2sError::data("more attribute labels than heads"));
    }
    let overall_term = (pred.overall - gt_overall).powi(2);
    let attribute_term = gt_attrs
        .iter()
        .zip(&pred.scores)
        .map(|(g, s)| (s - g).powi(2))
        .sum::<f64>();
    Ok(LossBreakdown {
        overall_term,
        attribute_term,
        total: overall_term + lambda * attribute_term,
    })
}
