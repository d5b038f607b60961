//! The mini-batch training loop.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::checkpoint::{Checkpoint, EpochRecord};
use super::config::TrainConfig;
use super::plateau::{plateau_step, PlateauConfig, PlateauState};
use crate::datasets::{FeatureRecord, Normalizer};
use crate::error::{F2sError, Result};
use crate::model::{forward_full, sample_loss, F2SParams, LossSettings, ModelConfig, Objective, ObjectiveRegistry};
use crate::numerics::{adam_step, AdamConfig, AdamState, Gradients};

/// Per-sample gradients are summed within fixed-size chunks and the chunk
/// sums are added in order, so results do not depend on the thread count.
const GRAD_CHUNK: usize = 8;

/// Splits off the last `fraction` of `records` (at least one) as validation.
pub fn split_validation(records: &[FeatureRecord], fraction: f64) -> Result<(Vec<FeatureRecord>, Vec<FeatureRecord>)> {
    let n = records.len();
    if n < 2 {
        return Err(F2sError::data(format!(
            "need at least 2 records to hold out a validation split, got {n}"
        )));
    }
    let k = ((n as f64 * fraction).round() as usize).clamp(1, n - 1);
    Ok((records[..n - k].to_vec(), records[n - k..].to_vec()))
}

/// Loss sum and summed gradient over `batch`.
fn batch_gradients(
    params: &F2SParams,
    config: &ModelConfig,
    objective: &dyn Objective,
    settings: LossSettings,
    batch: &[&FeatureRecord],
) -> Result<(f64, Gradients)> {
    let partials = batch
        .par_chunks(GRAD_CHUNK)
        .map(|chunk| {
            let mut g = Gradients::zeros_like(&params.store);
            let mut loss = 0.0;
            for r in chunk {
                loss += sample_loss(params, config, objective, settings, r, Some((&mut g, 1.0)))?.total;
            }
            Ok((loss, g))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut total = Gradients::zeros_like(&params.store);
    let mut loss = 0.0;
    for (l, g) in &partials {
        loss += l;
        total.add_assign(g);
    }
    Ok((loss, total))
}

/// Mean squared error of the predicted overall score.
pub fn overall_mse(params: &F2SParams, config: &ModelConfig, records: &[FeatureRecord]) -> Result<f64> {
    let errs = records
        .par_iter()
        .map(|r| forward_full(r, params, config).map(|p| (p.overall - r.overall).powi(2)))
        .collect::<Result<Vec<_>>>()?;
    Ok(errs.iter().sum::<f64>() / errs.len() as f64)
}

pub fn train(
    train_records: &[FeatureRecord],
    val_records: Option<&[FeatureRecord]>,
    model: &ModelConfig,
    cfg: &TrainConfig,
) -> Result<Checkpoint> {
    train_with(train_records, val_records, model, cfg, &ObjectiveRegistry::with_builtins(), &mut |_| {})
}

/// Full training run. Without `val_records` the last `cfg.val_fraction` of
/// `train_records` is held out. `on_epoch` sees each finished epoch.
pub fn train_with(
    train_records: &[FeatureRecord],
    val_records: Option<&[FeatureRecord]>,
    model: &ModelConfig,
    cfg: &TrainConfig,
    registry: &ObjectiveRegistry,
    on_epoch: &mut dyn FnMut(&EpochRecord),
) -> Result<Checkpoint> {
    cfg.validate(registry)?;
    model.validate()?;
    let objective = registry.get(&cfg.mode)?;
    if train_records.is_empty() {
        return Err(F2sError::data("training set is empty"));
    }
    let (train_set, val_set) = match val_records {
        Some(v) => (train_records.to_vec(), v.to_vec()),
        None => split_validation(train_records, cfg.val_fraction)?,
    };
    if val_set.is_empty() {
        return Err(F2sError::data("validation set is empty"));
    }
    for r in train_set.iter().chain(&val_set) {
        r.validate(model)?;
    }
    let normalization = if cfg.normalize {
        Some(Normalizer::fit(&train_set)?)
    } else {
        None
    };
    let (train_set, val_set) = match &normalization {
        Some(n) => (n.apply_all(&train_set)?, n.apply_all(&val_set)?),
        None => (train_set, val_set),
    };

    let mut params = F2SParams::init(model, cfg.seed)?;
    let mut adam = AdamState::new(
        &params.store,
        AdamConfig {
            lr: cfg.lr,
            ..AdamConfig::default()
        },
    );
    let plateau_cfg = PlateauConfig {
        factor: cfg.factor,
        patience: cfg.patience,
        min_lr: cfg.min_lr,
    };
    let mut plateau = PlateauState::new(cfg.lr);
    let settings = LossSettings::new(cfg.lambda, cfg.target);
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    shuffle_rng.set_stream(1);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut shuffle_rng);
        let lr = plateau.lr;
        let mut epoch_loss = 0.0;
        for (b, idx) in order.chunks(cfg.batch_size).enumerate() {
            let batch: Vec<&FeatureRecord> = idx.iter().map(|&i| &train_set[i]).collect();
            let (loss, mut grads) = batch_gradients(&params, model, objective.as_ref(), settings, &batch)?;
            if !loss.is_finite() {
                return Err(F2sError::Numeric(format!(
                    "non-finite loss at epoch {epoch}, batch {}",
                    b + 1
                )));
            }
            grads.scale(1.0 / batch.len() as f64);
            adam_step(&mut params.store, &grads, &mut adam, true)
                .map_err(|e| F2sError::Numeric(format!("epoch {epoch}, batch {}: {e}", b + 1)))?;
            epoch_loss += loss;
        }
        let val_mse = overall_mse(&params, model, &val_set)?;
        if !val_mse.is_finite() {
            return Err(F2sError::Numeric(format!("non-finite validation MSE at epoch {epoch}")));
        }
        plateau = plateau_step(plateau, val_mse, &plateau_cfg);
        adam.set_lr(plateau.lr);
        let rec = EpochRecord {
            epoch,
            train_loss: epoch_loss / train_set.len() as f64,
            val_mse,
            lr,
        };
        on_epoch(&rec);
        history.push(rec);
    }
    Ok(Checkpoint::new(model, &params, normalization, cfg, history))
}
