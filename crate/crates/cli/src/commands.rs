use std::path::Path;

use f2s_core::datasets::{
    generate_synthetic, hsv_grid_stats, read_p6, sharpness_grid_stats, write_feature_file, ChannelSet, Dataset,
    Manifest, SyntheticConfig,
};
use f2s_core::evaluation::{ablate_variant, evaluate, inspect};
use f2s_core::model::gradient_suite::{run_gradient_suite, GradSuiteOptions};
use f2s_core::model::{BucketGrid, ModelConfig};
use f2s_core::training::{load_checkpoint, save_checkpoint, train_with, TrainConfig, TrainedModel};
use f2s_core::{F2sError, Result};
use serde::Serialize;

use crate::args::*;
use crate::summary::{emit_run_summary, write_json};

/// Gradient-suite pass threshold.
const GRADCHECK_TOLERANCE: f64 = 1e-4;

fn print_resolved<T: Serialize>(what: &str, value: &T) {
    println!("{what}: {}", serde_json::to_string(value).expect("serializable"));
}

pub fn synth(a: &SynthArgs) -> Result<()> {
    let cfg = SyntheticConfig {
        seed: a.seed,
        attributes: a.attrs,
        attribute_dim: a.dim,
        global_dim: a.global_dim,
        train_n: a.train_n,
        test_n: a.test_n,
        noise: a.noise,
        contributions: a.contributions.clone(),
    };
    print_resolved("synth config", &cfg);
    let data = generate_synthetic(&cfg, &a.out)?;
    println!(
        "wrote {} train and {} test records to {}",
        data.train.len(),
        data.test.len(),
        a.out.display()
    );
    Ok(())
}

pub fn extract_hsv(a: &HsvArgs) -> Result<()> {
    let channels: ChannelSet = a.channels.parse()?;
    println!("extract-hsv: img={} grid={} channels={}", a.img.display(), a.grid, a.channels);
    let v = hsv_grid_stats(&read_p6(&a.img)?, a.grid, channels)?;
    write_feature_file(&a.out, &v)?;
    println!("wrote {} values to {}", v.len(), a.out.display());
    Ok(())
}

pub fn extract_sharp(a: &SharpArgs) -> Result<()> {
    println!("extract-sharp: img={} grid={}", a.img.display(), a.grid);
    let v = sharpness_grid_stats(&read_p6(&a.img)?, a.grid)?;
    write_feature_file(&a.out, &v)?;
    println!("wrote {} values to {}", v.len(), a.out.display());
    Ok(())
}

fn train_config(r: &RecipeArgs) -> TrainConfig {
    TrainConfig {
        mode: r.mode.clone(),
        lambda: r.lambda,
        target: r.target,
        lr: r.lr,
        factor: r.factor,
        patience: r.patience,
        min_lr: r.min_lr,
        batch_size: r.batch,
        epochs: r.epochs,
        seed: r.seed,
        val_fraction: r.val_fraction,
        normalize: !r.no_normalize,
    }
}

fn load_dataset(path: &Path, grid: &BucketGrid) -> Result<Dataset> {
    Manifest::read(path)?.load(grid)
}

/// Model shape taken from the first record of `ds`.
fn model_config(ds: &Dataset, r: &RecipeArgs, grid: BucketGrid) -> Result<ModelConfig> {
    let (Some(global), Some(dims)) = (ds.global_dim(), ds.attribute_dims()) else {
        return Err(F2sError::data("manifest has no records"));
    };
    let mut m = ModelConfig::new(ds.attribute_order.clone(), global, dims)?;
    m.hidden = r.hidden;
    m.sigma = r.sigma;
    m.include_extra = !r.no_extra;
    m.grid = grid;
    m.validate()?;
    Ok(m)
}

pub fn train(a: &TrainArgs) -> Result<()> {
    let grid = BucketGrid::integer_range(a.recipe.grid_min, a.recipe.grid_max)?;
    let cfg = train_config(&a.recipe);
    let train_ds = load_dataset(&a.manifest, &grid)?;
    let model = model_config(&train_ds, &a.recipe, grid.clone())?;
    print_resolved("model config", &model);
    print_resolved("train config", &cfg);
    println!("seed: {}", cfg.seed);
    train_ds.check_against(&model)?;
    let val_ds = match &a.val_manifest {
        Some(p) => {
            let v = load_dataset(p, &grid)?;
            v.check_against(&model)?;
            Some(v)
        }
        None => None,
    };
    let registry = f2s_core::model::ObjectiveRegistry::with_builtins();
    let ckpt = train_with(
        &train_ds.records,
        val_ds.as_ref().map(|v| v.records.as_slice()),
        &model,
        &cfg,
        &registry,
        &mut |e| {
            println!(
                "epoch {:>3}  train_loss {:.6}  val_mse {:.6}  lr {:e}",
                e.epoch, e.train_loss, e.val_mse, e.lr
            )
        },
    )?;
    let path = a.out.join("checkpoint.json");
    save_checkpoint(&path, &ckpt)?;
    println!("wrote {}", path.display());
    Ok(())
}

pub fn eval(a: &EvalArgs) -> Result<()> {
    let ckpt = load_checkpoint(&a.ckpt)?;
    print_resolved("model config", &ckpt.model);
    println!("seed: {}", ckpt.seed);
    let ds = load_dataset(&a.manifest, &ckpt.grid)?;
    let report = evaluate(&ds, &ckpt)?;
    emit_run_summary(&report, &a.out)
}

pub fn ablate(a: &AblateArgs) -> Result<()> {
    let grid = BucketGrid::integer_range(a.recipe.grid_min, a.recipe.grid_max)?;
    let cfg = train_config(&a.recipe);
    let train_ds = load_dataset(&a.manifest, &grid)?;
    let test_ds = load_dataset(&a.test_manifest, &grid)?;
    let model = model_config(&train_ds, &a.recipe, grid)?;
    print_resolved("model config", &model);
    print_resolved("train config", &cfg);
    println!("seed: {}  variant: {}", cfg.seed, a.variant);
    train_ds.check_against(&model)?;
    test_ds.check_against(&model)?;
    let (row, ckpt) = ablate_variant(&train_ds.records, &test_ds.records, &model, &cfg, &a.variant)?;
    save_checkpoint(a.out.join("checkpoint.json"), &ckpt)?;
    write_json(&a.out.join("ablation.json"), &row)?;
    println!(
        "variant {}: mean attribute srcc {}",
        row.variant,
        row.mean_attribute_srcc.map_or("unavailable".into(), |v| v.to_string())
    );
    emit_run_summary(&row.report, &a.out)
}

pub fn inspect_cmd(a: &InspectArgs) -> Result<()> {
    let ckpt = load_checkpoint(&a.ckpt)?;
    print_resolved("model config", &ckpt.model);
    println!("seed: {}", ckpt.seed);
    let ds = load_dataset(&a.manifest, &ckpt.grid)?;
    let model = TrainedModel::from_checkpoint(&ckpt)?;
    model.check_attribute_order(&ds.attribute_order)?;
    let record = ds
        .records
        .iter()
        .find(|r| r.id == a.id)
        .ok_or_else(|| F2sError::data(format!("no record with id {:?} in {}", a.id, a.manifest.display())))?;
    let ins = inspect(&model, record)?;
    println!("{:<16} {:<22} contribution", "head", "score");
    for h in &ins.heads {
        println!("{:<16} {:<22} {}", h.name, h.score, h.contribution);
    }
    println!("overall {} (label {})", ins.overall, ins.label);
    let path = a.out.join("inspection.json");
    write_json(&path, &ins)?;
    println!("wrote {}", path.display());
    Ok(())
}

/// Returns whether the suite passed.
pub fn gradcheck(a: &GradcheckArgs) -> Result<bool> {
    let opts = GradSuiteOptions {
        seed: a.seed,
        configs: a.configs,
        ..GradSuiteOptions::default()
    };
    println!(
        "gradcheck: seed={} configs={} hidden={} step={:e}",
        opts.seed, opts.configs, opts.hidden, opts.step
    );
    let report = run_gradient_suite(&opts)?;
    for c in &report.cases {
        println!(
            "case {:>2} {:<18} A={} dim={:<2} buckets={} max_rel_err={:.3e}",
            c.case, c.objective, c.attributes, c.dim, c.buckets, c.max_relative_error
        );
    }
    println!("max relative error: {:e}", report.max_relative_error);
    if let Some(out) = &a.out {
        write_json(out, &report)?;
    }
    Ok(report.max_relative_error < GRADCHECK_TOLERANCE)
}
