//! Deterministic training: Adam, reduce-on-plateau, checkpoints.

mod checkpoint;
mod config;
mod plateau;
mod train;

pub use checkpoint::{
    load_checkpoint, save_checkpoint, Checkpoint, EpochRecord, NamedArray, TrainedModel, CHECKPOINT_FORMAT,
    CHECKPOINT_VERSION,
};
pub use config::TrainConfig;
pub use plateau::{plateau_step, PlateauConfig, PlateauState, IMPROVEMENT_THRESHOLD};
pub use train::{overall_mse, split_validation, train, train_with};
