mod common;

use common::{quick_train, small_data, small_model};
use f2s_core::datasets::strip_labels;
use f2s_core::training::{load_checkpoint, save_checkpoint, split_validation, train, Checkpoint, TrainConfig, TrainedModel};
use f2s_core::F2sError;

#[test]
fn identical_runs_give_identical_checkpoint_bytes() {
    let data = small_data(1);
    let model = small_model(&data);
    let a = train(&strip_labels(&data.train), None, &model, &quick_train()).unwrap();
    let b = train(&strip_labels(&data.train), None, &model, &quick_train()).unwrap();
    assert_eq!(a.to_json(), b.to_json());
    let other = train(&data.train, None, &model, &TrainConfig { seed: 9, ..quick_train() }).unwrap();
    assert_ne!(a.to_json(), other.to_json());
}

#[test]
fn thread_count_does_not_change_result() {
    let data = small_data(2);
    let model = small_model(&data);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| train(&data.train, None, &model, &quick_train()).unwrap().to_json())
    };
    assert_eq!(run(1), run(3));
}

#[test]
fn checkpoint_round_trip_is_bit_identical() {
    let data = small_data(3);
    let model = small_model(&data);
    let ckpt = train(&data.train, None, &model, &quick_train()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run/model.json");
    save_checkpoint(&path, &ckpt).unwrap();
    let back = load_checkpoint(&path).unwrap();
    assert_eq!(back, ckpt);
    let before = TrainedModel::from_checkpoint(&ckpt).unwrap();
    let after = TrainedModel::from_checkpoint(&back).unwrap();
    for r in &data.test {
        let (p, q) = (before.predict(r).unwrap(), after.predict(r).unwrap());
        assert_eq!(p.overall.to_bits(), q.overall.to_bits());
        assert_eq!(p.scores, q.scores);
        assert_eq!(p.contributions, q.contributions);
    }
}

fn tamper(ckpt: &Checkpoint, f: impl FnOnce(&mut serde_json::Value)) -> Result<Checkpoint, F2sError> {
    let mut v: serde_json::Value = serde_json::from_str(&ckpt.to_json()).unwrap();
    f(&mut v);
    Checkpoint::from_json(&v.to_string(), std::path::Path::new("tampered.json"))
}

#[test]
fn tampered_checkpoints_are_rejected() {
    let data = small_data(4);
    let model = small_model(&data);
    let ckpt = train(&data.train, None, &model, &TrainConfig { epochs: 1, ..quick_train() }).unwrap();
    assert!(tamper(&ckpt, |_| {}).is_ok());
    let dropped = tamper(&ckpt, |v| {
        v["params"][0]["values"].as_array_mut().unwrap().pop();
    });
    assert!(dropped.unwrap_err().to_string().contains("values"));
    let version = tamper(&ckpt, |v| v["version"] = 99.into());
    assert!(version.unwrap_err().to_string().contains("version 99"));
    assert!(tamper(&ckpt, |v| v["surprise"] = 1.into()).is_err());
    assert!(tamper(&ckpt, |v| v["params"][1]["name"] = "head.x.b1".into()).is_err());
    assert!(tamper(&ckpt, |v| v["attribute_order"][0] = "other".into()).is_err());
}

#[test]
fn history_and_schedule() {
    let data = small_data(5);
    let model = small_model(&data);
    let ckpt = train(&data.train, None, &model, &TrainConfig { epochs: 12, ..quick_train() }).unwrap();
    assert_eq!(ckpt.history.len(), 12);
    assert!(ckpt.history.windows(2).all(|w| w[1].lr <= w[0].lr));
    assert!(ckpt.history.last().unwrap().train_loss < ckpt.history[0].train_loss);
    assert_eq!(ckpt.seed, 0);
}

#[test]
fn contract_errors() {
    let data = small_data(6);
    let model = small_model(&data);
    assert!(train(&[], None, &model, &quick_train()).is_err());
    assert!(train(&data.train, None, &model, &TrainConfig { epochs: 0, ..quick_train() }).is_err());
    assert!(train(&data.train[..1], None, &model, &quick_train()).is_err());
    assert!(train(&data.train, Some(&[]), &model, &quick_train()).is_err());
    let sup = TrainConfig { mode: "supervised".into(), ..quick_train() };
    let err = train(&strip_labels(&data.train), None, &model, &sup).unwrap_err();
    assert!(err.to_string().contains("train-00000"), "{err}");
    assert!(train(&data.train, None, &model, &sup).is_ok());
}

#[test]
fn validation_split_is_the_tail() {
    let data = small_data(7);
    let (tr, val) = split_validation(&data.train, 0.1).unwrap();
    assert_eq!((tr.len(), val.len()), (54, 6));
    assert_eq!(val[0].id, "train-00054");
}
