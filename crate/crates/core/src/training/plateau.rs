//! Reduce-on-plateau learning-rate schedule.

use serde::{Deserialize, Serialize};

/// A metric must beat the best so far by more than this to count.
pub const IMPROVEMENT_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlateauConfig {
    pub factor: f64,
    pub patience: usize,
    pub min_lr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlateauState {
    pub best: f64,
    pub bad_epochs: usize,
    pub lr: f64,
}

impl PlateauState {
    pub fn new(lr: f64) -> Self {
        PlateauState {
            best: f64::INFINITY,
            bad_epochs: 0,
            lr,
        }
    }
}

/// Feeds one epoch's metric. A reduction multiplies lr by exactly `factor`;
/// it is skipped when the result would fall below `min_lr`.
pub fn plateau_step(state: PlateauState, metric: f64, cfg: &PlateauConfig) -> PlateauState {
    let mut next = state;
    if metric < state.best - IMPROVEMENT_THRESHOLD {
        next.best = metric;
        next.bad_epochs = 0;
        return next;
    }
    next.bad_epochs += 1;
    if next.bad_epochs >= cfg.patience {
        let reduced = state.lr * cfg.factor;
        // relative slack so 1e-4 · 0.1³ still reaches a 1e-7 floor
        if reduced >= cfg.min_lr * (1.0 - 1e-9) {
            next.lr = reduced;
        }
        next.bad_epochs = 0;
    }
    next
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const CFG: PlateauConfig = PlateauConfig {
        factor: 0.1,
        patience: 5,
        min_lr: 1e-7,
    };

    fn trace(metrics: &[f64]) -> Vec<f64> {
        let mut s = PlateauState::new(1e-4);
        metrics
            .iter()
            .map(|&m| {
                s = plateau_step(s, m, &CFG);
                s.lr
            })
            .collect()
    }

    #[test]
    fn reference_trace() {
        let lrs = trace(&[1.0, 0.9, 0.91, 0.92, 0.93, 0.94, 0.95]);
        assert!(lrs[..6].iter().all(|&lr| lr == 1e-4));
        assert_eq!(lrs[6], 1e-4 * 0.1);
    }

    #[test]
    fn constant_metric_reduces_after_patience_plus_one() {
        let lrs = trace(&[0.5; 12]);
        assert!(lrs[..5].iter().all(|&lr| lr == 1e-4));
        assert_eq!(lrs[5], 1e-5);
        assert_eq!(lrs[10], 1e-4 * 0.1 * 0.1);
    }

    #[test]
    fn floor_holds() {
        let lrs = trace(&[0.5; 60]);
        let last = *lrs.last().unwrap();
        assert!((1e-7 * (1.0 - 1e-9)..1e-6).contains(&last));
    }

    #[test]
    fn tiny_improvements_do_not_count() {
        let lrs = trace(&[1.0, 1.0 - 1e-9, 1.0 - 2e-9, 1.0 - 3e-9, 1.0 - 4e-9, 1.0 - 5e-9]);
        assert_eq!(lrs[5], 1e-5);
    }

    proptest! {
        #[test]
        fn decreasing_metrics_never_reduce(start in 1.0f64..10.0, steps in prop::collection::vec(1e-6f64..1.0, 1..50)) {
            let mut m = start;
            let mut s = PlateauState::new(1e-4);
            for d in steps {
                m -= d;
                s = plateau_step(s, m, &CFG);
                prop_assert_eq!(s.lr, 1e-4);
            }
        }

        #[test]
        fn lr_only_moves_by_factor(metrics in prop::collection::vec(0.0f64..1.0, 1..80)) {
            let mut s = PlateauState::new(1e-4);
            for m in metrics {
                let prev = s.lr;
                s = plateau_step(s, m, &CFG);
                prop_assert!(s.lr == prev || s.lr == prev * 0.1);
                prop_assert!(s.bad_epochs < CFG.patience);
            }
        }
    }
}
