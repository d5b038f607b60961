#![allow(dead_code)]

use f2s_core::datasets::{synthesize, SyntheticConfig, SyntheticData};
use f2s_core::model::ModelConfig;
use f2s_core::training::TrainConfig;

pub fn small_data(seed: u64) -> SyntheticData {
    synthesize(&SyntheticConfig {
        seed,
        attributes: 2,
        attribute_dim: 4,
        global_dim: 6,
        train_n: 60,
        test_n: 20,
        ..SyntheticConfig::default()
    })
    .unwrap()
}

pub fn small_model(data: &SyntheticData) -> ModelConfig {
    let c = &data.config;
    let mut m = ModelConfig::new(data.attribute_names.clone(), c.global_dim, vec![c.attribute_dim; c.attributes]).unwrap();
    m.hidden = 8;
    m
}

pub fn quick_train() -> TrainConfig {
    TrainConfig {
        epochs: 3,
        batch_size: 16,
        lr: 1e-3,
        ..TrainConfig::default()
    }
}
