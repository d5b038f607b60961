//! Synthetic benchmark with hidden per-attribute ground truth.
//!
//! Each sample draws latent attribute scores `s*` uniformly over the model
//! score range. Attribute feature `i` is a fixed random direction scaled by
//! `s*_i` plus Gaussian noise; the global feature is a fixed random linear map
//! of the whole `s*` vector plus noise. The overall label is `Σ c*_i s*_i`.
//!
//! On disk (`generate_synthetic` / `write_synthetic`):
//!
//! ```text
//! out/synth.json                  generator config, c*, attribute names
//! out/train.jsonl                 training manifest, overall labels only
//! out/test.jsonl                  test manifest, with attribute labels
//! out/hidden/train_labeled.jsonl  training manifest with attribute labels
//! out/features/{split}/{id}/{name}.f2sf
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::feature_file::write_feature_file;
use super::manifest::{Manifest, ManifestEntry, ManifestHeader};
use super::record::FeatureRecord;
use crate::error::{F2sError, Result};
use crate::model::{BucketGrid, GLOBAL_FEATURE};
use crate::numerics::{Tensor1, Tensor2};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticConfig {
    pub seed: u64,
    pub attributes: usize,
    pub attribute_dim: usize,
    pub global_dim: usize,
    pub train_n: usize,
    pub test_n: usize,
    /// Standard deviation of the additive feature noise.
    pub noise: f64,
    /// Ground-truth contributions; `None` means uniform `1/A`.
    #[serde(default)]
    pub contributions: Option<Vec<f64>>,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            seed: 7,
            attributes: 4,
            attribute_dim: 16,
            global_dim: 32,
            train_n: 2000,
            test_n: 500,
            noise: 0.05,
            contributions: None,
        }
    }
}

impl SyntheticConfig {
    pub fn attribute_names(&self) -> Vec<String> {
        (0..self.attributes).map(|i| format!("attr{i}")).collect()
    }

    pub fn resolved_contributions(&self) -> Vec<f64> {
        self.contributions
            .clone()
            .unwrap_or_else(|| vec![1.0 / self.attributes as f64; self.attributes])
    }

    pub fn validate(&self) -> Result<()> {
        if self.attributes == 0 || self.attribute_dim == 0 || self.global_dim == 0 {
            return Err(F2sError::config("attribute count and feature dims must be positive"));
        }
        if self.train_n == 0 || self.test_n == 0 {
            return Err(F2sError::config("train and test counts must be positive"));
        }
        if !(self.noise.is_finite() && self.noise >= 0.0) {
            return Err(F2sError::config(format!("noise must be finite and >= 0, got {}", self.noise)));
        }
        let c = self.resolved_contributions();
        if c.len() != self.attributes {
            return Err(F2sError::config(format!(
                "{} contributions given for {} attributes",
                c.len(),
                self.attributes
            )));
        }
        let sum: f64 = c.iter().sum();
        if c.iter().any(|v| v.is_nan() || *v < 0.0) || (sum - 1.0).abs() > 1e-9 {
            return Err(F2sError::config(format!("contributions must lie on the simplex, got {c:?}")));
        }
        Ok(())
    }
}

/// Generated samples. Every record carries its hidden attribute labels;
/// use [`strip_labels`] before handing records to semi-supervised training.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    pub config: SyntheticConfig,
    pub attribute_names: Vec<String>,
    pub train: Vec<FeatureRecord>,
    pub test: Vec<FeatureRecord>,
}

struct Embeddings {
    attr: Vec<Vec<f64>>,
    global: Tensor2,
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Feature values are rounded to f32 so in-memory data equals what the
/// feature files hold.
fn to_f32_grid(v: Vec<f64>) -> Tensor1 {
    Tensor1::new(v.into_iter().map(|x| x as f32 as f64).collect())
}

fn draw_sample(
    rng: &mut ChaCha8Rng,
    id: String,
    cfg: &SyntheticConfig,
    emb: &Embeddings,
    c: &[f64],
    names: &[String],
    grid: &BucketGrid,
) -> FeatureRecord {
    let s: Vec<f64> = (0..cfg.attributes)
        .map(|_| rng.random_range(grid.min_score()..=grid.max_score()))
        .collect();
    let mut features = BTreeMap::new();
    for (i, name) in names.iter().enumerate() {
        let v = emb.attr[i].iter().map(|e| e * s[i] + cfg.noise * gaussian(rng)).collect();
        features.insert(name.clone(), to_f32_grid(v));
    }
    let g = (0..cfg.global_dim)
        .map(|r| {
            let row = &emb.global.as_slice()[r * cfg.attributes..(r + 1) * cfg.attributes];
            let proj: f64 = row.iter().zip(&s).map(|(w, x)| w * x).sum();
            proj + cfg.noise * gaussian(rng)
        })
        .collect();
    features.insert(GLOBAL_FEATURE.to_string(), to_f32_grid(g));
    let overall = s.iter().zip(c).map(|(a, b)| a * b).sum::<f64>().clamp(grid.min_score(), grid.max_score());
    FeatureRecord {
        id,
        overall,
        attr_labels: names.iter().cloned().zip(s).collect(),
        features,
    }
}

/// Builds the dataset in memory. Scores use the default 1..10 grid range.
pub fn synthesize(cfg: &SyntheticConfig) -> Result<SyntheticData> {
    cfg.validate()?;
    let grid = BucketGrid::default();
    let names = cfg.attribute_names();
    let c = cfg.resolved_contributions();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let attr = (0..cfg.attributes)
        .map(|_| (0..cfg.attribute_dim).map(|_| gaussian(&mut rng)).collect())
        .collect();
    let scale = 1.0 / (cfg.attributes as f64).sqrt();
    let global_w = (0..cfg.global_dim * cfg.attributes).map(|_| gaussian(&mut rng) * scale).collect();
    let emb = Embeddings {
        attr,
        global: Tensor2::new(cfg.global_dim, cfg.attributes, global_w)?,
    };
    let mut split = |prefix: &str, n: usize| -> Vec<FeatureRecord> {
        (0..n)
            .map(|k| draw_sample(&mut rng, format!("{prefix}-{k:05}"), cfg, &emb, &c, &names, &grid))
            .collect()
    };
    let train = split("train", cfg.train_n);
    let test = split("test", cfg.test_n);
    Ok(SyntheticData {
        config: cfg.clone(),
        attribute_names: names,
        train,
        test,
    })
}

/// Copies of `records` with attribute labels removed.
pub fn strip_labels(records: &[FeatureRecord]) -> Vec<FeatureRecord> {
    records
        .iter()
        .map(|r| FeatureRecord {
            attr_labels: BTreeMap::new(),
            ..r.clone()
        })
        .collect()
}

#[derive(Serialize)]
struct SynthInfo<'a> {
    config: &'a SyntheticConfig,
    attribute_names: &'a [String],
    contributions: Vec<f64>,
}

fn split_manifest(
    records: &[FeatureRecord],
    names: &[String],
    split: &str,
    prefix: &str,
    with_labels: bool,
) -> Manifest {
    let entries = records
        .iter()
        .map(|r| ManifestEntry {
            id: r.id.clone(),
            overall: r.overall,
            attributes: with_labels.then(|| r.attr_labels.clone()),
            features: r
                .features
                .keys()
                .map(|name| (name.clone(), format!("{prefix}features/{split}/{}/{name}.f2sf", r.id)))
                .collect(),
        })
        .collect();
    Manifest {
        header: ManifestHeader::new(names.to_vec()),
        entries,
        base_dir: Default::default(),
    }
}

/// Writes `data` under `out` in the layout described in the module docs.
pub fn write_synthetic(data: &SyntheticData, out: &Path) -> Result<()> {
    for (split, records) in [("train", &data.train), ("test", &data.test)] {
        records.par_iter().try_for_each(|r| {
            r.features.iter().try_for_each(|(name, v)| {
                write_feature_file(out.join(format!("features/{split}/{}/{name}.f2sf", r.id)), v)
            })
        })?;
    }
    let names = &data.attribute_names;
    split_manifest(&data.train, names, "train", "", false).write(out.join("train.jsonl"))?;
    split_manifest(&data.test, names, "test", "", true).write(out.join("test.jsonl"))?;
    split_manifest(&data.train, names, "train", "../", true).write(out.join("hidden/train_labeled.jsonl"))?;
    let info = SynthInfo {
        config: &data.config,
        attribute_names: names,
        contributions: data.config.resolved_contributions(),
    };
    let path = out.join("synth.json");
    let text = serde_json::to_string_pretty(&info).expect("config serializes");
    fs::write(&path, text + "\n").map_err(|e| F2sError::io(&path, e))
}

pub fn generate_synthetic(cfg: &SyntheticConfig, out: &Path) -> Result<SyntheticData> {
    let data = synthesize(cfg)?;
    write_synthetic(&data, out)?;
    Ok(data)
}
