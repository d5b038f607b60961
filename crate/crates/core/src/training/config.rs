use serde::{Deserialize, Serialize};

use crate::error::{F2sError, Result};
use crate::model::{ObjectiveRegistry, PriorTarget};

/// Optimizer, schedule and loss settings. Defaults are the reference recipe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    /// Objective name in the [`ObjectiveRegistry`]: `semi` or `supervised`.
    pub mode: String,
    pub lambda: f64,
    /// Right-hand side of the prior term in `semi` mode.
    pub target: PriorTarget,
    pub lr: f64,
    pub factor: f64,
    pub patience: usize,
    pub min_lr: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    /// Fraction of the training manifest held out (from the end) when no
    /// validation set is given.
    pub val_fraction: f64,
    pub normalize: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            mode: "semi".into(),
            lambda: 1.0,
            target: PriorTarget::Predicted,
            lr: 1e-4,
            factor: 0.1,
            patience: 5,
            min_lr: 1e-7,
            batch_size: 64,
            epochs: 40,
            seed: 0,
            val_fraction: 0.1,
            normalize: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self, registry: &ObjectiveRegistry) -> Result<()> {
        registry.get(&self.mode)?;
        let checks = [
            (self.lambda.is_finite() && self.lambda >= 0.0, "lambda must be finite and >= 0"),
            (self.lr.is_finite() && self.lr > 0.0, "lr must be positive"),
            (self.factor > 0.0 && self.factor < 1.0, "factor must be in (0, 1)"),
            (self.patience >= 1, "patience must be >= 1"),
            (self.min_lr.is_finite() && self.min_lr >= 0.0, "min_lr must be >= 0"),
            (self.batch_size >= 1, "batch size must be >= 1"),
            (self.epochs >= 1, "epochs must be >= 1"),
            (self.val_fraction > 0.0 && self.val_fraction < 1.0, "val_fraction must be in (0, 1)"),
        ];
        match checks.iter().find(|(ok, _)| !ok) {
            Some((_, msg)) => Err(F2sError::config(*msg)),
            None => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_values() {
        let reg = ObjectiveRegistry::with_builtins();
        assert!(TrainConfig::default().validate(&reg).is_ok());
        let bad = [
            TrainConfig { epochs: 0, ..Default::default() },
            TrainConfig { batch_size: 0, ..Default::default() },
            TrainConfig { patience: 0, ..Default::default() },
            TrainConfig { factor: 1.0, ..Default::default() },
            TrainConfig { mode: "nope".into(), ..Default::default() },
            TrainConfig { val_fraction: 0.0, ..Default::default() },
        ];
        for c in bad {
            assert!(c.validate(&reg).is_err(), "{c:?}");
        }
    }
}
