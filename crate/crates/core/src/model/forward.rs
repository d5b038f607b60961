//! Forward pass: mixed features, score heads, contributions, overall score.
//!
//! The free functions here work on plain values; [`forward_taped`] records the
//! same computation on a [`Tape`] for training. Both go through the same
//! numeric kernels, and [`forward_full`] is the taped path without a backward
//! pass, so training and inference agree to the bit.

use serde::{Deserialize, Serialize};

use super::config::{BucketGrid, ModelConfig};
use super::params::{F2SParams, HeadWeights};
use crate::datasets::FeatureRecord;
use crate::error::{F2sError, Result};
use crate::numerics::{self, NodeId, Tape, Tensor1, Tensor2};

/// Probability mass over the buckets of a [`BucketGrid`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ScoreDistribution {
    p: Vec<f64>,
}

impl ScoreDistribution {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() || p.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(F2sError::data("distribution entries must be finite and non-negative"));
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > 1e-6 {
            return Err(F2sError::data(format!("distribution sums to {total}, not 1")));
        }
        Ok(ScoreDistribution { p })
    }

    pub fn uniform(n: usize) -> Self {
        ScoreDistribution {
            p: vec![1.0 / n as f64; n],
        }
    }

    pub fn one_hot(n: usize, at: usize) -> Self {
        let mut p = vec![0.0; n];
        p[at] = 1.0;
        ScoreDistribution { p }
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.p
    }
}

/// Output of one forward pass. `scores[i]` and `contributions[i]` follow
/// [`ModelConfig::head_names`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub scores: Vec<f64>,
    pub contributions: Vec<f64>,
    pub overall: f64,
    pub distributions: Vec<ScoreDistribution>,
}

/// `[global ‖ attr_1 ‖ … ‖ attr_A]`
pub fn assemble_mixed(global: &Tensor1, attrs: &[&Tensor1]) -> Tensor1 {
    let mut parts = Vec::with_capacity(attrs.len() + 1);
    parts.push(global);
    parts.extend_from_slice(attrs);
    numerics::concat(&parts)
}

/// Pulls the global and per-attribute features out of `record` in config
/// order and concatenates them, checking every dim.
pub fn mixed_from_record(record: &FeatureRecord, config: &ModelConfig) -> Result<Tensor1> {
    record.validate_features(config)?;
    let attrs: Vec<&Tensor1> = config
        .attribute_names
        .iter()
        .map(|n| record.feature(n))
        .collect::<Result<_>>()?;
    Ok(assemble_mixed(record.global()?, &attrs))
}

fn head_distribution(input: &Tensor1, head: &HeadWeights) -> Result<ScoreDistribution> {
    let hidden = numerics::relu(&numerics::linear_forward(input, &head.w1, &head.b1)?);
    let logits = numerics::linear_forward(&hidden, &head.w2, &head.b2)?;
    Ok(ScoreDistribution {
        p: numerics::softmax(&logits)?.into_vec(),
    })
}

/// Distribution head for one attribute, fed `[mixed ‖ attr_feat]`.
pub fn attribute_head_forward(
    mixed: &Tensor1,
    attr_feat: &Tensor1,
    head: &HeadWeights,
) -> Result<ScoreDistribution> {
    head_distribution(&numerics::concat(&[mixed, attr_feat]), head)
}

/// Distribution head for the extra attribute, fed `[global ‖ mixed]`.
pub fn extra_head_forward(
    global: &Tensor1,
    mixed: &Tensor1,
    head: &HeadWeights,
) -> Result<ScoreDistribution> {
    head_distribution(&numerics::concat(&[global, mixed]), head)
}

/// `S = (1/Nb) Σ p_i s_i`. The `1/Nb` factor maps a 1..10 grid onto [0.1, 1].
pub fn score_from_distribution(d: &ScoreDistribution, grid: &BucketGrid) -> Result<f64> {
    if d.p.len() != grid.len() {
        return Err(F2sError::config(format!(
            "distribution has {} buckets, grid has {}",
            d.p.len(),
            grid.len()
        )));
    }
    let total: f64 = d.p.iter().zip(grid.values()).map(|(p, s)| p * s).sum();
    Ok(total * (1.0 / grid.len() as f64))
}

/// `C = softmax(Wc · mixed + bc)`
pub fn contributions(mixed: &Tensor1, wc: &Tensor2, bc: &Tensor1) -> Result<Tensor1> {
    numerics::softmax(&numerics::linear_forward(mixed, wc, bc)?)
}

/// `Σ S_i · C_i`
pub fn overall_score(scores: &Tensor1, contributions: &Tensor1) -> Result<f64> {
    numerics::dot(scores, contributions)
}

/// `w = softmax(sigmoid(x) + σ)`. Since the sigmoid lies in (0, 1), no
/// weight can exceed another by a factor of `e` or more.
pub fn prior_weights(x: &Tensor1, sigma: f64) -> Result<Tensor1> {
    let shifted: Vec<f64> = numerics::sigmoid(x).iter().map(|v| v + sigma).collect();
    numerics::softmax(&Tensor1::new(shifted))
}

/// Node handles produced by [`forward_taped`].
#[derive(Debug, Clone)]
pub struct PredictionNodes {
    pub distributions: Vec<NodeId>,
    pub scores: Vec<NodeId>,
    /// All head scores as one vector node.
    pub score_vec: NodeId,
    pub contributions: NodeId,
    pub overall: NodeId,
}

/// Records the whole forward pass for `record` on `tape`.
pub fn forward_taped(
    tape: &mut Tape<'_>,
    params: &F2SParams,
    config: &ModelConfig,
    record: &FeatureRecord,
) -> Result<PredictionNodes> {
    record.validate_features(config)?;
    let global = tape.input(record.global()?.as_slice().to_vec());
    let attrs: Vec<NodeId> = config
        .attribute_names
        .iter()
        .map(|n| Ok(tape.input(record.feature(n)?.as_slice().to_vec())))
        .collect::<Result<_>>()?;

    let mut mixed_parts = vec![global];
    mixed_parts.extend_from_slice(&attrs);
    let mixed = tape.concat(&mixed_parts);

    let grid_node = tape.input(config.grid.values().to_vec());
    let inv_nb = 1.0 / config.grid.len() as f64;

    let mut distributions = Vec::with_capacity(config.num_heads());
    let mut scores = Vec::with_capacity(config.num_heads());
    for (h, hp) in params.heads.iter().enumerate() {
        let input = if h < attrs.len() {
            tape.concat(&[mixed, attrs[h]])
        } else {
            tape.concat(&[global, mixed])
        };
        let (w1, b1, w2, b2) = (tape.param(hp.w1), tape.param(hp.b1), tape.param(hp.w2), tape.param(hp.b2));
        let pre = tape.linear(input, w1, b1)?;
        let hidden = tape.relu(pre);
        let logits = tape.linear(hidden, w2, b2)?;
        let dist = tape.softmax(logits);
        let raw = tape.dot(dist, grid_node)?;
        let score = tape.scale(raw, inv_nb);
        distributions.push(dist);
        scores.push(score);
    }
    let score_vec = tape.concat(&scores);

    let wc = tape.param(params.contribution_w);
    let bc = tape.param(params.contribution_b);
    let y = tape.linear(mixed, wc, bc)?;
    let contributions = tape.softmax(y);
    let overall = tape.dot(score_vec, contributions)?;

    Ok(PredictionNodes {
        distributions,
        scores,
        score_vec,
        contributions,
        overall,
    })
}

/// Records `softmax(sigmoid(x) + σ)` on the tape.
pub fn prior_weights_taped(tape: &mut Tape<'_>, params: &F2SParams, sigma: f64) -> NodeId {
    let x = tape.param(params.prior_x);
    let s = tape.sigmoid(x);
    let shifted = tape.add_scalar(s, sigma);
    tape.softmax(shifted)
}

pub fn read_prediction(tape: &Tape<'_>, nodes: &PredictionNodes) -> Prediction {
    Prediction {
        scores: tape.value(nodes.score_vec).to_vec(),
        contributions: tape.value(nodes.contributions).to_vec(),
        overall: tape.scalar(nodes.overall),
        distributions: nodes
            .distributions
            .iter()
            .map(|d| ScoreDistribution {
                p: tape.value(*d).to_vec(),
            })
            .collect(),
    }
}

/// Inference forward pass for one record.
pub fn forward_full(record: &FeatureRecord, params: &F2SParams, config: &ModelConfig) -> Result<Prediction> {
    let mut tape = Tape::new(&params.store);
    let nodes = forward_taped(&mut tape, params, config, record)?;
    Ok(read_prediction(&tape, &nodes))
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn t(v: &[f64]) -> Tensor1 {
        Tensor1::new(v.to_vec())
    }

    fn config(names: &[&str], dims: &[usize]) -> ModelConfig {
        let mut c = ModelConfig::new(names.iter().map(|s| s.to_string()).collect(), 3, dims.to_vec()).unwrap();
        c.hidden = 6;
        c
    }

    fn random_record(cfg: &ModelConfig, rng: &mut ChaCha8Rng) -> FeatureRecord {
        let mut features = BTreeMap::new();
        features.insert(
            "global".to_string(),
            Tensor1::new((0..cfg.global_dim).map(|_| rng.random_range(-1.0..1.0)).collect()),
        );
        for (n, &d) in cfg.attribute_names.iter().zip(&cfg.attribute_dims) {
            features.insert(n.clone(), Tensor1::new((0..d).map(|_| rng.random_range(-1.0..1.0)).collect()));
        }
        FeatureRecord {
            id: "r".into(),
            overall: 0.5,
            attr_labels: BTreeMap::new(),
            features,
        }
    }

    #[test]
    fn mixed_concatenation() {
        assert_eq!(assemble_mixed(&t(&[1.0]), &[&t(&[2.0]), &t(&[3.0])]).as_slice(), &[1.0, 2.0, 3.0]);
        assert_eq!(assemble_mixed(&t(&[4.0, 5.0]), &[]).as_slice(), &[4.0, 5.0]);
    }

    #[test]
    fn mixed_from_record_checks_dims() {
        let cfg = config(&["a", "b"], &[2, 2]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut rec = random_record(&cfg, &mut rng);
        assert_eq!(mixed_from_record(&rec, &cfg).unwrap().len(), 7);
        rec.features.insert("b".into(), t(&[1.0]));
        let err = mixed_from_record(&rec, &cfg).unwrap_err().to_string();
        assert!(err.contains("attribute b"), "{err}");
        rec.features.remove("b");
        assert!(mixed_from_record(&rec, &cfg).unwrap_err().to_string().contains("missing feature b"));
    }

    #[test]
    fn zero_heads_give_uniform() {
        let head = HeadWeights::zeros(5, 4, 10);
        let d = attribute_head_forward(&t(&[1.0, 2.0, 3.0]), &t(&[4.0, 5.0]), &head).unwrap();
        assert!(d.probabilities().iter().all(|p| (p - 0.1).abs() < 1e-15));
        let d = extra_head_forward(&t(&[1.0, 2.0]), &t(&[1.0, 2.0, 3.0]), &head).unwrap();
        assert!(d.probabilities().iter().all(|&p| p >= 0.0 && (p - 0.1).abs() < 1e-15));
        assert!(attribute_head_forward(&t(&[1.0]), &t(&[1.0]), &head).is_err());
    }

    #[test]
    fn random_head_is_a_distribution_and_deterministic() {
        let cfg = config(&["a"], &[2]);
        let p = F2SParams::init(&cfg, 3).unwrap();
        let hw = p.head_weights(0);
        let mixed = t(&[0.3, -0.1, 0.9, 0.2, -0.5]);
        let attr = t(&[0.2, -0.5]);
        let d1 = attribute_head_forward(&mixed, &attr, &hw).unwrap();
        let d2 = attribute_head_forward(&mixed, &attr, &hw).unwrap();
        assert_eq!(d1, d2);
        assert!((d1.probabilities().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn score_from_distribution_points() {
        let grid = BucketGrid::default();
        let s = score_from_distribution(&ScoreDistribution::uniform(10), &grid).unwrap();
        assert!((s - 0.55).abs() < 1e-9);
        let s = score_from_distribution(&ScoreDistribution::one_hot(10, 9), &grid).unwrap();
        assert!((s - 1.0).abs() < 1e-9);
        let aadb = BucketGrid::integer_range(0, 10).unwrap();
        let s = score_from_distribution(&ScoreDistribution::one_hot(11, 0), &aadb).unwrap();
        assert!(s.abs() < 1e-9);
        assert!(score_from_distribution(&ScoreDistribution::uniform(11), &grid).is_err());
    }

    #[test]
    fn contribution_cases() {
        let c = contributions(&t(&[1.0, -2.0]), &Tensor2::zeros(3, 2), &Tensor1::zeros(3)).unwrap();
        assert!(c.iter().all(|v| (v - 1.0 / 3.0).abs() < 1e-15));
        let c = contributions(&t(&[1.0]), &Tensor2::zeros(2, 1), &t(&[0.0, 3f64.ln()])).unwrap();
        assert!((c[0] - 0.25).abs() < 1e-12 && (c[1] - 0.75).abs() < 1e-12);
        let shifted = contributions(&t(&[1.0]), &Tensor2::zeros(2, 1), &t(&[5.0, 5.0 + 3f64.ln()])).unwrap();
        assert!((shifted[0] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn overall_cases() {
        assert_eq!(overall_score(&t(&[0.5, 0.5]), &t(&[0.3, 0.7])).unwrap(), 0.5);
        assert_eq!(overall_score(&t(&[0.2, 0.8]), &t(&[0.5, 0.5])).unwrap(), 0.5);
        assert_eq!(overall_score(&t(&[0.2, 0.8, 0.4]), &t(&[0.0, 0.0, 1.0])).unwrap(), 0.4);
        assert!(overall_score(&t(&[0.2]), &t(&[0.5, 0.5])).is_err());
    }

    #[test]
    fn prior_weight_cases() {
        let w = prior_weights(&Tensor1::zeros(4), 1.0).unwrap();
        assert!(w.iter().all(|v| (v - 0.25).abs() < 1e-15));
        // x_1 -> +inf: sigmoid terms 1 and 0.5, so w_1 = 1 / (1 + e^{-0.5})
        let w = prior_weights(&t(&[1e3, 0.0]), 1.0).unwrap();
        assert!((w[0] - 1.0 / (1.0 + (-0.5f64).exp())).abs() < 1e-12);
        assert!((w[0] - 0.6225).abs() < 1e-4);
    }

    #[test]
    fn zero_params_forward() {
        let cfg = config(&["a", "b"], &[2, 3]);
        let params = F2SParams::zeros(&cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pred = forward_full(&random_record(&cfg, &mut rng), &params, &cfg).unwrap();
        assert_eq!(pred.scores.len(), 3);
        for s in &pred.scores {
            assert!((s - 0.55).abs() < 1e-12);
        }
        for c in &pred.contributions {
            assert!((c - 1.0 / 3.0).abs() < 1e-12);
        }
        assert!((pred.overall - 0.55).abs() < 1e-12);
    }

    #[test]
    fn taped_forward_matches_value_kernels() {
        let cfg = config(&["a", "b"], &[2, 3]);
        let params = F2SParams::init(&cfg, 9).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rec = random_record(&cfg, &mut rng);
        let pred = forward_full(&rec, &params, &cfg).unwrap();

        let mixed = mixed_from_record(&rec, &cfg).unwrap();
        let da = attribute_head_forward(&mixed, rec.feature("a").unwrap(), &params.head_weights(0)).unwrap();
        let de = extra_head_forward(rec.global().unwrap(), &mixed, &params.head_weights(2)).unwrap();
        assert_eq!(da, pred.distributions[0]);
        assert_eq!(de, pred.distributions[2]);
        let s0 = score_from_distribution(&da, &cfg.grid).unwrap();
        assert!((s0 - pred.scores[0]).abs() < 1e-15);
        let (wc, bc) = params.contribution_weights();
        let c = contributions(&mixed, &wc, &bc).unwrap();
        assert_eq!(c.as_slice(), pred.contributions.as_slice());
    }

    #[test]
    fn attribute_permutation_permutes_outputs() {
        let cfg = config(&["a", "b", "c"], &[2, 2, 2]);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for seed in 0..10 {
            let params = F2SParams::init(&cfg, seed).unwrap();
            let rec = random_record(&cfg, &mut rng);
            let pred = forward_full(&rec, &params, &cfg).unwrap();

            // swap attributes a and c in the config, the features and every
            // parameter that depends on attribute order
            let mut pcfg = cfg.clone();
            pcfg.attribute_names = vec!["c".into(), "b".into(), "a".into()];
            let perm = permuted_params(&params, &cfg, &[2, 1, 0]);
            let pp = F2SParams::from_store(&pcfg, perm).unwrap();
            let ppred = forward_full(&rec, &pp, &pcfg).unwrap();

            assert!((pred.overall - ppred.overall).abs() < 1e-6);
            for (i, j) in [(0usize, 2usize), (1, 1), (2, 0), (3, 3)] {
                assert!((pred.scores[i] - ppred.scores[j]).abs() < 1e-12);
                assert!((pred.contributions[i] - ppred.contributions[j]).abs() < 1e-12);
            }
        }
    }

    /// Rebuilds the parameter store for a config whose attributes are listed
    /// in `order` (indices into the original attribute list).
    fn permuted_params(p: &F2SParams, cfg: &ModelConfig, order: &[usize]) -> crate::numerics::ParamStore {
        let a = cfg.num_attributes();
        let g = cfg.global_dim;
        let offsets: Vec<usize> = cfg
            .attribute_dims
            .iter()
            .scan(g, |acc, d| {
                let o = *acc;
                *acc += d;
                Some(o)
            })
            .collect();
        // column map for a mixed-vector input: new column -> old column
        let mut mixed_map: Vec<usize> = (0..g).collect();
        for &k in order {
            mixed_map.extend(offsets[k]..offsets[k] + cfg.attribute_dims[k]);
        }
        let remap_cols = |values: &[f64], rows: usize, cols: usize, map: &[usize]| -> Vec<f64> {
            let mut out = vec![0.0; rows * cols];
            for r in 0..rows {
                for (c, &oc) in map.iter().enumerate() {
                    out[r * cols + c] = values[r * cols + oc];
                }
            }
            out
        };
        let mut head_order: Vec<usize> = order.to_vec();
        head_order.push(a);
        let mut store = crate::numerics::ParamStore::new();
        let names: Vec<String> = order
            .iter()
            .map(|&k| cfg.attribute_names[k].clone())
            .chain(std::iter::once("extra".to_string()))
            .collect();
        for (new_h, &old_h) in head_order.iter().enumerate() {
            let hp = p.heads[old_h];
            let w1_shape = p.store.shape(hp.w1).to_vec();
            let mut map = mixed_map.clone();
            if old_h < a {
                let md = cfg.mixed_dim();
                map.extend(md..md + cfg.attribute_dims[old_h]);
            } else {
                let mut m: Vec<usize> = (0..g).collect();
                m.extend(mixed_map.iter().map(|c| c + g));
                map = m;
            }
            let w1 = remap_cols(p.store.values(hp.w1), w1_shape[0], w1_shape[1], &map);
            let name = &names[new_h];
            store.add(format!("head.{name}.w1"), w1_shape, w1).unwrap();
            for (suffix, id) in [("b1", hp.b1), ("w2", hp.w2), ("b2", hp.b2)] {
                store
                    .add(format!("head.{name}.{suffix}"), p.store.shape(id).to_vec(), p.store.values(id).to_vec())
                    .unwrap();
            }
        }
        let cw_shape = p.store.shape(p.contribution_w).to_vec();
        let cw = remap_cols(p.store.values(p.contribution_w), cw_shape[0], cw_shape[1], &mixed_map);
        let mut cw_rows = vec![0.0; cw.len()];
        for (new_h, &old_h) in head_order.iter().enumerate() {
            let cols = cw_shape[1];
            cw_rows[new_h * cols..(new_h + 1) * cols].copy_from_slice(&cw[old_h * cols..(old_h + 1) * cols]);
        }
        store.add("contribution.w", cw_shape, cw_rows).unwrap();
        let pick = |id| head_order.iter().map(|&h| p.store.values(id)[h]).collect::<Vec<f64>>();
        store.add("contribution.b", vec![a + 1], pick(p.contribution_b)).unwrap();
        store.add("prior.x", vec![a + 1], pick(p.prior_x)).unwrap();
        store
    }
}
