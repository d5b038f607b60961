//! The scoring model: per-attribute distribution heads, an extra head,
//! softmax contributions, the learnable prior and the training objectives.

mod config;
mod forward;
pub mod gradient_suite;
mod objective;
mod params;

pub use config::{BucketGrid, ModelConfig, EXTRA_HEAD, GLOBAL_FEATURE};
pub use forward::{
    assemble_mixed, attribute_head_forward, contributions, extra_head_forward, forward_full,
    forward_taped, mixed_from_record, overall_score, prior_weights, prior_weights_taped,
    read_prediction, score_from_distribution, Prediction, PredictionNodes, ScoreDistribution,
};
pub use objective::{
    loss_semi, loss_supervised, LossBreakdown, LossInputs, LossNodes, Objective, ObjectiveRegistry,
    PriorTarget, SemiSupervised, Supervised,
};
pub use params::{param_layout, F2SParams, HeadParams, HeadWeights};

use crate::datasets::FeatureRecord;
use crate::error::{F2sError, Result};
use crate::numerics::{Gradients, Tape};

/// Loss hyperparameters shared by every objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossSettings {
    pub lambda: f64,
    pub target: PriorTarget,
    /// See [`LossInputs::frozen_anchor`].
    pub frozen_anchor: Option<f64>,
}

impl LossSettings {
    pub fn new(lambda: f64, target: PriorTarget) -> Self {
        LossSettings {
            lambda,
            target,
            frozen_anchor: None,
        }
    }
}

/// Forward pass plus loss for one record. When `grads` is given, the gradient
/// of `seed * loss` is added into it.
pub fn sample_loss(
    params: &F2SParams,
    config: &ModelConfig,
    objective: &dyn Objective,
    settings: LossSettings,
    record: &FeatureRecord,
    grads: Option<(&mut Gradients, f64)>,
) -> Result<LossBreakdown> {
    let labels = if objective.requires_attribute_labels() {
        Some(record.labels_for(&config.attribute_names).ok_or_else(|| {
            F2sError::data(format!("record {}: missing attribute labels", record.id))
        })?)
    } else {
        None
    };
    let mut tape = Tape::new(&params.store);
    let pred = forward_taped(&mut tape, params, config, record)?;
    let inputs = LossInputs {
        gt_overall: record.overall,
        gt_attributes: labels.as_deref(),
        lambda: settings.lambda,
        sigma: config.sigma,
        target: settings.target,
        frozen_anchor: settings.frozen_anchor,
        grid: &config.grid,
    };
    let nodes = objective
        .build(&mut tape, params, &pred, &inputs)
        .map_err(|e| match e {
            F2sError::Data(m) => F2sError::data(format!("record {}: {m}", record.id)),
            other => other,
        })?;
    if let Some((g, seed)) = grads {
        tape.backward(nodes.total, seed, g)?;
    }
    Ok(nodes.read(&tape))
}
