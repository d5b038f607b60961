//! Finite-difference check of both objectives over randomly drawn model
//! configurations.

use std::collections::BTreeMap;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{sample_loss, BucketGrid, F2SParams, LossSettings, ModelConfig, Objective, ObjectiveRegistry, PriorTarget};
use crate::datasets::FeatureRecord;
use crate::error::Result;
use crate::numerics::{grad_check, GradCheckOptions, Gradients, ParamStore, Tensor1};

/// Hidden pre-activations are kept at least this far from zero so that a
/// central difference never straddles a ReLU kink.
const KINK_MARGIN: f64 = 0.02;

#[derive(Debug, Clone, Serialize)]
pub struct GradCaseReport {
    pub case: usize,
    pub objective: String,
    pub attributes: usize,
    pub dim: usize,
    pub buckets: usize,
    pub max_relative_error: f64,
    pub worst_param: Option<String>,
    pub entries_checked: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct GradSuiteReport {
    pub seed: u64,
    pub cases: Vec<GradCaseReport>,
    pub max_relative_error: f64,
}

#[derive(Debug, Clone)]
pub struct GradSuiteOptions {
    pub seed: u64,
    pub configs: usize,
    pub hidden: usize,
    pub entries_per_param: usize,
    pub step: f64,
}

impl Default for GradSuiteOptions {
    fn default() -> Self {
        GradSuiteOptions {
            seed: 0,
            configs: 20,
            hidden: 128,
            entries_per_param: 12,
            // 1e-3 leaves O(h²) truncation error above 1e-4 relative on
            // gradients near 1e-5; 1e-4 keeps both truncation and rounding low.
            step: 1e-4,
        }
    }
}

/// One random configuration with a point to check at.
pub struct GradCase {
    pub config: ModelConfig,
    pub params: F2SParams,
    pub record: FeatureRecord,
}

/// Draws a configuration with `A ∈ {2,4,8}`, feature dims in `{4,16}` and
/// `Nb ∈ {10,11}`, plus a generic parameter point and record.
pub fn random_case(rng: &mut ChaCha8Rng, hidden: usize) -> Result<GradCase> {
    let a = *[2usize, 4, 8].choose(rng).unwrap();
    let dim = *[4usize, 16].choose(rng).unwrap();
    let grid = if rng.random_bool(0.5) {
        BucketGrid::integer_range(1, 10)?
    } else {
        BucketGrid::integer_range(0, 10)?
    };
    let names: Vec<String> = (0..a).map(|i| format!("attr{i}")).collect();
    let mut config = ModelConfig::new(names.clone(), dim, vec![dim; a])?;
    config.hidden = hidden;
    config.grid = grid;

    let mut params = F2SParams::init(&config, rng.random())?;
    // move away from the all-zero start so every gradient is non-trivial
    for id in [params.prior_x, params.contribution_b] {
        for v in params.store.values_mut(id) {
            *v = rng.random_range(-1.0..1.0);
        }
    }
    for h in params.heads.clone() {
        for v in params.store.values_mut(h.b2) {
            *v = rng.random_range(-0.5..0.5);
        }
    }

    let mut features = BTreeMap::new();
    let mut draw = |n: usize| Tensor1::new((0..n).map(|_| rng.random_range(-1.0..1.0)).collect());
    features.insert("global".to_string(), draw(dim));
    for n in &names {
        features.insert(n.clone(), draw(dim));
    }
    let attr_labels = names
        .iter()
        .map(|n| (n.clone(), rng.random_range(config.grid.min_score()..config.grid.max_score())))
        .collect();
    let record = FeatureRecord {
        id: "gradcheck".into(),
        overall: rng.random_range(config.grid.min_score()..config.grid.max_score()),
        attr_labels,
        features,
    };
    push_off_kinks(&mut params, &config, &record)?;
    Ok(GradCase { config, params, record })
}

/// Shifts first-layer biases so no hidden pre-activation is within
/// `KINK_MARGIN` of zero at this record.
fn push_off_kinks(params: &mut F2SParams, config: &ModelConfig, record: &FeatureRecord) -> Result<()> {
    let mixed = super::mixed_from_record(record, config)?;
    let global = record.global()?.clone();
    for (h, hp) in params.heads.clone().into_iter().enumerate() {
        let input = if h < config.num_attributes() {
            crate::numerics::concat(&[&mixed, record.feature(&config.attribute_names[h])?])
        } else {
            crate::numerics::concat(&[&global, &mixed])
        };
        let w = params.head_weights(h);
        let z = crate::numerics::linear_forward(&input, &w.w1, &w.b1)?;
        let b1 = params.store.values_mut(hp.b1);
        for (b, zi) in b1.iter_mut().zip(z.iter()) {
            if zi.abs() < KINK_MARGIN {
                *b += if *zi >= 0.0 { 2.0 * KINK_MARGIN } else { -2.0 * KINK_MARGIN };
            }
        }
    }
    Ok(())
}

pub fn check_case(
    case: &GradCase,
    objective: &dyn Objective,
    settings: LossSettings,
    opts: &GradCheckOptions,
) -> Result<crate::numerics::GradCheckReport> {
    let f = |store: &ParamStore, grads: Option<&mut Gradients>| -> Result<f64> {
        let params = F2SParams {
            store: store.clone(),
            ..case.params.clone()
        };
        let g = grads.map(|g| (g, 1.0));
        Ok(sample_loss(&params, &case.config, objective, settings, &case.record, g)?.total)
    };
    grad_check(&f, &case.params.store, opts)
}

/// Checks `semi` (both prior targets) and `supervised` on `configs` random
/// configurations. With the predicted target, the stopped anchor is frozen at
/// its value at the check point.
pub fn run_gradient_suite(opts: &GradSuiteOptions) -> Result<GradSuiteReport> {
    let registry = ObjectiveRegistry::with_builtins();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut cases = Vec::new();
    for case_idx in 0..opts.configs {
        let case = random_case(&mut rng, opts.hidden)?;
        let anchor = super::forward_full(&case.record, &case.params, &case.config)?.overall;
        let variants = [
            ("semi", PriorTarget::Predicted, Some(anchor)),
            ("semi", PriorTarget::GroundTruth, None),
            ("supervised", PriorTarget::Predicted, None),
        ];
        for (name, target, frozen_anchor) in variants {
            let objective = registry.get(name)?;
            let settings = LossSettings {
                lambda: 1.0,
                target,
                frozen_anchor,
            };
            let check = GradCheckOptions {
                step: opts.step,
                max_entries_per_param: Some(opts.entries_per_param),
                seed: opts.seed ^ ((case_idx as u64) << 8),
            };
            let r = check_case(&case, objective.as_ref(), settings, &check)?;
            let label = match (name, target) {
                ("semi", PriorTarget::GroundTruth) => "semi/ground-truth".to_string(),
                _ => name.to_string(),
            };
            cases.push(GradCaseReport {
                case: case_idx,
                objective: label,
                attributes: case.config.num_attributes(),
                dim: case.config.global_dim,
                buckets: case.config.grid.len(),
                max_relative_error: r.max_relative_error,
                worst_param: r.worst_param,
                entries_checked: r.entries_checked,
            });
        }
    }
    let max_relative_error = cases.iter().map(|c| c.max_relative_error).fold(0.0, f64::max);
    Ok(GradSuiteReport {
        seed: opts.seed,
        cases,
        max_relative_error,
    })
}
