//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fail. Run with `cargo test --test acceptance`.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use f2s_core::datasets::{
    decode_features, encode_features, strip_labels, synthesize, FeatureRecord, SyntheticConfig, SyntheticData,
};
use f2s_core::evaluation::{ablate_variant, evaluate_records, srcc, AblationRow};
use f2s_core::model::gradient_suite::{run_gradient_suite, GradSuiteOptions};
use f2s_core::model::{
    forward_full, prior_weights, score_from_distribution, BucketGrid, F2SParams, ModelConfig, ScoreDistribution,
};
use f2s_core::numerics::Tensor1;
use f2s_core::training::{plateau_step, train, PlateauConfig, PlateauState, TrainConfig, TrainedModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn gradient_suite() -> Outcome {
    let t = Instant::now();
    let r = run_gradient_suite(&GradSuiteOptions::default()).expect("suite runs");
    let elapsed = t.elapsed();
    outcome(
        r.max_relative_error < 1e-4 && elapsed < Duration::from_secs(30),
        format!(
            "{} checks, max relative error {:.2e}, {:.1}s",
            r.cases.len(),
            r.max_relative_error,
            elapsed.as_secs_f64()
        ),
    )
}

fn random_model(rng: &mut ChaCha8Rng) -> (ModelConfig, F2SParams, FeatureRecord) {
    let a = rng.random_range(1..=8);
    let dim = rng.random_range(1..=12);
    let names: Vec<String> = (0..a).map(|i| format!("a{i}")).collect();
    let mut config = ModelConfig::new(names.clone(), dim, vec![dim; a]).unwrap();
    config.hidden = rng.random_range(1..=24);
    config.include_extra = rng.random_bool(0.7);
    config.sigma = rng.random_range(0.05..3.0);
    config.grid = if rng.random_bool(0.5) {
        BucketGrid::integer_range(1, 10).unwrap()
    } else {
        BucketGrid::integer_range(0, 10).unwrap()
    };
    let mut params = F2SParams::init(&config, rng.random()).unwrap();
    let scale = rng.random_range(0.1..20.0);
    for id in params.store.ids().collect::<Vec<_>>() {
        for v in params.store.values_mut(id) {
            *v = rng.random_range(-1.0..1.0) * scale;
        }
    }
    let mut draw = |n: usize| Tensor1::new((0..n).map(|_| rng.random_range(-5.0..5.0)).collect());
    let mut features = BTreeMap::new();
    features.insert("global".to_string(), draw(dim));
    for n in &names {
        features.insert(n.clone(), draw(dim));
    }
    let record = FeatureRecord {
        id: "probe".into(),
        overall: 0.5,
        attr_labels: BTreeMap::new(),
        features,
    };
    (config, params, record)
}

fn algebraic_invariants() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut range_ok = true;
    for _ in 0..1000 {
        let (config, params, record) = random_model(&mut rng);
        let p = forward_full(&record, &params, &config).unwrap();
        let w = prior_weights(&params.prior_logits(), config.sigma).unwrap();
        let sum_c: f64 = p.contributions.iter().sum();
        let sum_w: f64 = w.iter().sum();
        let ratio = w.iter().cloned().fold(f64::MIN, f64::max) / w.iter().cloned().fold(f64::MAX, f64::min);
        let decomposed: f64 = p.scores.iter().zip(&p.contributions).map(|(s, c)| s * c).sum();
        worst.0 = worst.0.max((sum_c - 1.0).abs());
        worst.1 = worst.1.max((sum_w - 1.0).abs());
        worst.2 = worst.2.max(ratio);
        worst.3 = worst.3.max((p.overall - decomposed).abs());
        let (lo, hi) = (config.grid.min_score(), config.grid.max_score());
        range_ok &= p.scores.iter().all(|&s| s >= lo - 1e-12 && s <= hi + 1e-12);
    }
    let pass = worst.0 < 1e-6 && worst.1 < 1e-6 && worst.2 < std::f64::consts::E && worst.3 < 1e-6 && range_ok;
    outcome(
        pass,
        format!(
            "1000 passes: |sum C - 1| {:.1e}, |sum w - 1| {:.1e}, max w/min w {:.4}, |S - sum SC| {:.1e}, scores in range {range_ok}",
            worst.0, worst.1, worst.2, worst.3
        ),
    )
}

fn distribution_points() -> Outcome {
    let g1 = BucketGrid::integer_range(1, 10).unwrap();
    let g0 = BucketGrid::integer_range(0, 10).unwrap();
    let uniform = score_from_distribution(&ScoreDistribution::uniform(10), &g1).unwrap();
    let top = score_from_distribution(&ScoreDistribution::one_hot(10, 9), &g1).unwrap();
    let zero = score_from_distribution(&ScoreDistribution::one_hot(11, 0), &g0).unwrap();
    let pass = (uniform - 0.55).abs() < 1e-9 && (top - 1.0).abs() < 1e-9 && zero.abs() < 1e-9;
    outcome(pass, format!("uniform 1..10 -> {uniform}, one-hot at 10 -> {top}, one-hot at 0 on 0..10 -> {zero}"))
}

/// Ranks built by an explicit stable sort and tie-group scan; Pearson by
/// the raw-sums formula.
fn reference_srcc(a: &[f64], b: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut order: Vec<usize> = (0..v.len()).collect();
        order.sort_by(|&i, &j| v[i].partial_cmp(&v[j]).unwrap());
        let mut r = vec![0.0; v.len()];
        let mut start = 0;
        for end in 1..=order.len() {
            if end == order.len() || v[order[end]] != v[order[start]] {
                let avg = (start + 1 + end) as f64 / 2.0;
                for &k in &order[start..end] {
                    r[k] = avg;
                }
                start = end;
            }
        }
        r
    }
    let (x, y) = (ranks(a), ranks(b));
    let n = x.len() as f64;
    let sx: f64 = x.iter().sum();
    let sy: f64 = y.iter().sum();
    let sxy: f64 = x.iter().zip(&y).map(|(p, q)| p * q).sum();
    let sxx: f64 = x.iter().map(|p| p * p).sum();
    let syy: f64 = y.iter().map(|q| q * q).sum();
    (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt())
}

fn srcc_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut worst = 0.0f64;
    let mut with_ties = 0;
    let mut done = 0;
    while done < 100 {
        let n = rng.random_range(2..60);
        let tied = done % 2 == 0;
        let draw = |rng: &mut ChaCha8Rng| -> Vec<f64> {
            (0..n)
                .map(|_| if tied { rng.random_range(0..5) as f64 } else { rng.random_range(-1.0..1.0) })
                .collect()
        };
        let a = draw(&mut rng);
        let b = draw(&mut rng);
        if a.iter().all(|&v| v == a[0]) || b.iter().all(|&v| v == b[0]) {
            continue;
        }
        with_ties += usize::from(tied);
        worst = worst.max((srcc(&a, &b).unwrap() - reference_srcc(&a, &b)).abs());
        done += 1;
    }
    let worked = srcc(&[1.0, 2.0, 2.0, 3.0], &[1.0, 2.0, 3.0, 4.0]).unwrap();
    outcome(
        worst < 1e-12 && (worked - 0.9487).abs() < 1e-4,
        format!("100 instances ({with_ties} with ties), max deviation {worst:.1e}; tie example {worked:.6}"),
    )
}

fn plateau_trace() -> Outcome {
    let cfg = PlateauConfig {
        factor: 0.1,
        patience: 5,
        min_lr: 1e-7,
    };
    let mut s = PlateauState::new(1e-4);
    let lrs: Vec<f64> = [1.0, 0.9, 0.91, 0.92, 0.93, 0.94, 0.95]
        .iter()
        .map(|&m| {
            s = plateau_step(s, m, &cfg);
            s.lr
        })
        .collect();
    let pass = lrs[..6].iter().all(|&lr| lr == 1e-4) && lrs[6] == 1e-4 * 0.1;
    outcome(pass, format!("lr after each metric: {lrs:?}"))
}

fn model_config(data: &SyntheticData) -> ModelConfig {
    let c = &data.config;
    ModelConfig::new(data.attribute_names.clone(), c.global_dim, vec![c.attribute_dim; c.attributes]).unwrap()
}

fn determinism(data: &SyntheticData) -> Outcome {
    let model = model_config(data);
    let cfg = TrainConfig {
        epochs: 3,
        ..TrainConfig::default()
    };
    let train_set = strip_labels(&data.train);
    let a = train(&train_set, None, &model, &cfg).unwrap().to_json();
    let b = train(&train_set, None, &model, &cfg).unwrap().to_json();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut files_ok = true;
    for r in data.train.iter().take(200) {
        for v in r.features.values() {
            let bytes = encode_features(v).unwrap();
            let back = decode_features(&bytes, std::path::Path::new("mem")).unwrap();
            files_ok &= back.iter().zip(v.iter()).all(|(x, y)| x.to_bits() == y.to_bits()) && back.len() == v.len();
        }
    }
    for _ in 0..200 {
        let n = rng.random_range(0..64);
        let v = Tensor1::from_f32(&(0..n).map(|_| rng.random::<f32>() * 1e3 - 5e2).collect::<Vec<f32>>());
        let back = decode_features(&encode_features(&v).unwrap(), std::path::Path::new("mem")).unwrap();
        files_ok &= back == v;
    }
    outcome(
        a == b && files_ok,
        format!(
            "checkpoints byte-identical: {} ({} bytes); feature files bit-exact: {files_ok}",
            a == b,
            a.len()
        ),
    )
}

fn run_semi(data: &SyntheticData, variant: &str) -> AblationRow {
    ablate_variant(&strip_labels(&data.train), &data.test, &model_config(data), &TrainConfig::default(), variant)
        .unwrap()
        .0
}

fn fmt(v: Option<f64>) -> String {
    v.map_or("n/a".into(), |x| format!("{x:.4}"))
}

fn main() {
    let mut results: Vec<(&str, Outcome)> = Vec::new();
    let mut check = |name: &'static str, f: &mut dyn FnMut() -> Outcome| {
        let o = f();
        println!("{} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push((name, o));
    };

    check("gradient suite", &mut gradient_suite);
    check("algebraic invariants", &mut algebraic_invariants);
    check("distribution-to-score points", &mut distribution_points);
    check("srcc oracle", &mut srcc_oracle);
    check("plateau trace", &mut plateau_trace);

    let default = SyntheticConfig::default();
    let data = synthesize(&default).unwrap();
    check("determinism", &mut || determinism(&data));

    check("noise-free oracle", &mut || {
        let clean = synthesize(&SyntheticConfig { noise: 0.0, ..default.clone() }).unwrap();
        let row = run_semi(&clean, "complete");
        let r = row.overall_srcc.unwrap_or(f64::NAN);
        outcome(
            r > 0.99,
            format!(
                "noise 0: overall srcc {r:.4}, mean attribute srcc {}",
                fmt(row.mean_attribute_srcc)
            ),
        )
    });

    let mut complete_mean = None;
    check("synthetic recovery", &mut || {
        let t = Instant::now();
        let complete = run_semi(&data, "complete");
        let none = run_semi(&data, "none");
        let elapsed = t.elapsed();
        complete_mean = complete.mean_attribute_srcc;
        let overall = complete.overall_srcc.unwrap_or(f64::NAN);
        let margin = match (complete.mean_attribute_srcc, none.mean_attribute_srcc) {
            (Some(c), Some(n)) => c - n,
            _ => f64::NAN,
        };
        outcome(
            overall >= 0.9 && margin >= 0.1 && elapsed < Duration::from_secs(300),
            format!(
                "overall srcc {overall:.4}; mean attribute srcc complete {} vs none {} (margin {margin:.4}); {:.0}s",
                fmt(complete.mean_attribute_srcc),
                fmt(none.mean_attribute_srcc),
                elapsed.as_secs_f64()
            ),
        )
    });

    check("supervised vs semi", &mut || {
        let cfg = TrainConfig {
            mode: "supervised".into(),
            ..TrainConfig::default()
        };
        let model = model_config(&data);
        let ckpt = train(&data.train, None, &model, &cfg).unwrap();
        let report = evaluate_records(&TrainedModel::from_checkpoint(&ckpt).unwrap(), &data.test).unwrap();
        let sup = report.mean_attribute_srcc();
        let pass = matches!((sup, complete_mean), (Some(s), Some(c)) if s >= c);
        outcome(pass, format!("mean attribute srcc supervised {} vs semi {}", fmt(sup), fmt(complete_mean)))
    });

    let failed: Vec<&str> = results.iter().filter(|(_, o)| !o.pass).map(|(n, _)| *n).collect();
    println!("{} of {} criteria passed", results.len() - failed.len(), results.len());
    if !failed.is_empty() {
        println!("failed: {}", failed.join(", "));
        std::process::exit(1);
    }
}
