use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use f2s_core::model::PriorTarget;

#[derive(Debug, Parser)]
#[command(name = "f2s", version, about = "Attribute scores and contributions from overall aesthetic labels")]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "F2S_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate the synthetic benchmark with hidden attribute labels.
    Synth(SynthArgs),
    /// Per-cell HSV mean/variance of a P6 image, written as a feature file.
    ExtractHsv(HsvArgs),
    /// Per-cell Laplacian variance of a P6 image, written as a feature file.
    ExtractSharp(SharpArgs),
    /// Train a model on a manifest.
    Train(TrainArgs),
    /// Evaluate a checkpoint on a manifest.
    Eval(EvalArgs),
    /// Retrain with some attribute features replaced by global features.
    Ablate(AblateArgs),
    /// Per-head breakdown for one record.
    Inspect(InspectArgs),
    /// Finite-difference check of both objectives on random configurations.
    Gradcheck(GradcheckArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 4)]
    pub attrs: usize,
    /// Attribute feature dimension.
    #[arg(long, default_value_t = 16)]
    pub dim: usize,
    #[arg(long, default_value_t = 32)]
    pub global_dim: usize,
    #[arg(long, default_value_t = 2000)]
    pub train_n: usize,
    #[arg(long, default_value_t = 500)]
    pub test_n: usize,
    #[arg(long, default_value_t = 0.05)]
    pub noise: f64,
    /// Ground-truth contributions, comma separated (default uniform).
    #[arg(long, value_delimiter = ',')]
    pub contributions: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct HsvArgs {
    #[arg(long)]
    pub img: PathBuf,
    #[arg(long, default_value_t = 16)]
    pub grid: usize,
    /// Any of H, S, V, e.g. `HS` or `V`.
    #[arg(long, default_value = "HSV")]
    pub channels: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SharpArgs {
    #[arg(long)]
    pub img: PathBuf,
    #[arg(long, default_value_t = 16)]
    pub grid: usize,
    #[arg(long)]
    pub out: PathBuf,
}

/// Model and optimizer flags shared by `train` and `ablate`.
#[derive(Debug, Args)]
pub struct RecipeArgs {
    #[arg(long, default_value = "semi")]
    pub mode: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-4)]
    pub lr: f64,
    #[arg(long, default_value_t = 64)]
    pub batch: usize,
    #[arg(long, default_value_t = 40)]
    pub epochs: usize,
    #[arg(long, default_value_t = 5)]
    pub patience: usize,
    #[arg(long, default_value_t = 0.1)]
    pub factor: f64,
    #[arg(long, default_value_t = 1e-7)]
    pub min_lr: f64,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    /// Prior-term target in semi mode: `predicted` or `ground-truth`.
    #[arg(long, default_value = "predicted")]
    pub target: PriorTarget,
    #[arg(long, default_value_t = 128)]
    pub hidden: usize,
    /// Lowest and highest integer bucket of the score grid.
    #[arg(long, default_value_t = 1)]
    pub grid_min: i32,
    #[arg(long, default_value_t = 10)]
    pub grid_max: i32,
    /// Drop the extra head.
    #[arg(long)]
    pub no_extra: bool,
    #[arg(long, default_value_t = 0.1)]
    pub val_fraction: f64,
    /// Skip z-score normalization of features.
    #[arg(long)]
    pub no_normalize: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub val_manifest: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub recipe: RecipeArgs,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub ckpt: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub test_manifest: PathBuf,
    /// `complete`, `none` or `attr:<name>`.
    #[arg(long)]
    pub variant: String,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub recipe: RecipeArgs,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    #[arg(long)]
    pub id: String,
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub ckpt: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 20)]
    pub configs: usize,
    /// Also write the per-case report as JSON here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
