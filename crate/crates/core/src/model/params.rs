use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::ModelConfig;
use crate::error::{F2sError, Result};
use crate::numerics::{ParamId, ParamStore, Tensor1, Tensor2};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeadParams {
    pub w1: ParamId,
    pub b1: ParamId,
    pub w2: ParamId,
    pub b2: ParamId,
}

/// Plain-value copy of one head, for the untaped kernels.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadWeights {
    pub w1: Tensor2,
    pub b1: Tensor1,
    pub w2: Tensor2,
    pub b2: Tensor1,
}

impl HeadWeights {
    pub fn zeros(input: usize, hidden: usize, buckets: usize) -> Self {
        HeadWeights {
            w1: Tensor2::zeros(hidden, input),
            b1: Tensor1::zeros(hidden),
            w2: Tensor2::zeros(buckets, hidden),
            b2: Tensor1::zeros(buckets),
        }
    }
}

/// Every trainable tensor of the model, held in one [`ParamStore`].
#[derive(Debug, Clone, PartialEq)]
pub struct F2SParams {
    pub store: ParamStore,
    pub heads: Vec<HeadParams>,
    pub contribution_w: ParamId,
    pub contribution_b: ParamId,
    pub prior_x: ParamId,
}

fn xavier(rng: &mut ChaCha8Rng, fan_out: usize, fan_in: usize) -> Vec<f64> {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    (0..fan_in * fan_out)
        .map(|_| rng.random_range(-limit..=limit) as f32 as f64)
        .collect()
}

/// Parameter names, in store order, for `config`.
pub fn param_layout(config: &ModelConfig) -> Vec<(String, Vec<usize>)> {
    let nb = config.grid.len();
    let h = config.hidden;
    let mut out = Vec::new();
    for (i, name) in config.head_names().iter().enumerate() {
        let input = config.head_input_dim(i);
        out.push((format!("head.{name}.w1"), vec![h, input]));
        out.push((format!("head.{name}.b1"), vec![h]));
        out.push((format!("head.{name}.w2"), vec![nb, h]));
        out.push((format!("head.{name}.b2"), vec![nb]));
    }
    let n = config.num_heads();
    out.push(("contribution.w".into(), vec![n, config.mixed_dim()]));
    out.push(("contribution.b".into(), vec![n]));
    out.push(("prior.x".into(), vec![n]));
    out
}

impl F2SParams {
    /// Seeded Xavier-uniform weights, zero biases, zero prior logits.
    pub fn init(config: &ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store = ParamStore::new();
        for (name, shape) in param_layout(config) {
            let values = if shape.len() == 2 {
                xavier(&mut rng, shape[0], shape[1])
            } else {
                vec![0.0; shape[0]]
            };
            store.add(name, shape, values)?;
        }
        F2SParams::from_store(config, store)
    }

    /// All parameters zero: uniform head distributions and contributions.
    pub fn zeros(config: &ModelConfig) -> Result<Self> {
        config.validate()?;
        let mut store = ParamStore::new();
        for (name, shape) in param_layout(config) {
            let n = shape.iter().product();
            store.add(name, shape, vec![0.0; n])?;
        }
        F2SParams::from_store(config, store)
    }

    /// Binds a store to `config`, checking that names and shapes match exactly.
    pub fn from_store(config: &ModelConfig, store: ParamStore) -> Result<Self> {
        let layout = param_layout(config);
        if store.len() != layout.len() {
            return Err(F2sError::config(format!(
                "parameter store has {} tensors, model expects {}",
                store.len(),
                layout.len()
            )));
        }
        for (id, (name, shape)) in store.ids().zip(&layout) {
            if store.name(id) != name || store.shape(id) != shape.as_slice() {
                return Err(F2sError::config(format!(
                    "parameter {} {:?} does not match expected {name} {shape:?}",
                    store.name(id),
                    store.shape(id)
                )));
            }
            if store.values(id).iter().any(|v| !v.is_finite()) {
                return Err(F2sError::config(format!("parameter {name} is not finite")));
            }
        }
        let id = |i: usize| ParamId(i);
        let heads = (0..config.num_heads())
            .map(|h| HeadParams {
                w1: id(4 * h),
                b1: id(4 * h + 1),
                w2: id(4 * h + 2),
                b2: id(4 * h + 3),
            })
            .collect();
        let base = 4 * config.num_heads();
        Ok(F2SParams {
            store,
            heads,
            contribution_w: id(base),
            contribution_b: id(base + 1),
            prior_x: id(base + 2),
        })
    }

    pub fn head_weights(&self, head: usize) -> HeadWeights {
        let hp = self.heads[head];
        let mat = |p: ParamId| {
            let shape = self.store.shape(p);
            Tensor2::new(shape[0], shape[1], self.store.values(p).to_vec()).expect("shape checked")
        };
        let vec = |p: ParamId| Tensor1::new(self.store.values(p).to_vec());
        HeadWeights {
            w1: mat(hp.w1),
            b1: vec(hp.b1),
            w2: mat(hp.w2),
            b2: vec(hp.b2),
        }
    }

    pub fn contribution_weights(&self) -> (Tensor2, Tensor1) {
        let shape = self.store.shape(self.contribution_w);
        (
            Tensor2::new(shape[0], shape[1], self.store.values(self.contribution_w).to_vec())
                .expect("shape checked"),
            Tensor1::new(self.store.values(self.contribution_b).to_vec()),
        )
    }

    pub fn prior_logits(&self) -> Tensor1 {
        Tensor1::new(self.store.values(self.prior_x).to_vec())
    }
}
