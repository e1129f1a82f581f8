use std::fs;

use openre::corpus::{gen_synthetic, load_jsonl, write_jsonl, RelationInstance, Span, SplitSpec};
use openre::encoder::{load_checkpoint, save_checkpoint};
use openre::evaluation::MetricsReport;
use openre::experiment::{run_experiment, Arm, ExperimentPreset};
use openre::training::{train, StepRecord, TrainConfig};
use serde_json::{json, Value};

fn small_spec() -> SplitSpec {
    SplitSpec {
        known: 3,
        val_unknown: 1,
        test_unknown: 1,
        per_relation: 16,
        ..SplitSpec::default()
    }
}

#[test]
fn instance_jsonl_round_trip_with_and_without_dep_path() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.jsonl");
    let mut annotated = RelationInstance::new(
        ["Ada", "founded", "Acme", "Labs"].map(String::from).to_vec(),
        Span(0, 1),
        Span(2, 4),
        "founded_by",
    );
    annotated.dep_path = Some(vec![0, 1, 3]);
    let plain = RelationInstance::new(vec!["x".into(), "y".into()], Span(0, 1), Span(1, 2), "NOTA");
    write_jsonl(&path, &[annotated.clone(), plain.clone()]).unwrap();

    let text = fs::read_to_string(&path).unwrap();
    let lines: Vec<Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(
        lines[0],
        json!({"tokens": ["Ada", "founded", "Acme", "Labs"], "head": [0, 1], "tail": [2, 4],
               "relation": "founded_by", "dep_path": [0, 1, 3]})
    );
    assert!(lines[1].get("dep_path").is_none());
    assert_eq!(load_jsonl(&path).unwrap(), vec![annotated, plain]);
}

#[test]
fn malformed_lines_are_reported_by_number() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.jsonl");
    fs::write(&path, "").unwrap();
    assert!(load_jsonl(&path).unwrap().is_empty());

    fs::write(&path, r#"{"head": [0, 1], "tail": [1, 2], "relation": "r"}"#).unwrap();
    let err = load_jsonl(&path).unwrap_err().to_string();
    assert!(err.contains("line 1"), "{err}");

    let good = r#"{"tokens": ["a", "b"], "head": [0, 1], "tail": [1, 2], "relation": "r"}"#;
    fs::write(&path, format!("{good}\n{}\n", r#"{"tokens": ["a"], "head": [0, 1], "tail": [1, 3], "relation": "r"}"#)).unwrap();
    let err = load_jsonl(&path).unwrap_err().to_string();
    assert!(err.contains("line 2"), "{err}");
}

#[test]
fn generated_splits_survive_jsonl() {
    let dir = tempfile::tempdir().unwrap();
    let splits = gen_synthetic(&small_spec()).unwrap();
    for (name, set) in [("train", &splits.train), ("val", &splits.validation), ("test", &splits.test)] {
        let path = dir.path().join(format!("{name}.jsonl"));
        write_jsonl(&path, set).unwrap();
        assert_eq!(&load_jsonl(&path).unwrap(), set);
    }
}

#[test]
fn checkpoint_round_trip_is_exact() {
    let splits = gen_synthetic(&small_spec()).unwrap();
    let cfg = TrainConfig {
        epochs: 2,
        d_model: 8,
        ..TrainConfig::default()
    };
    let (model, _) = train(&cfg, &splits.train, &splits.validation).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    save_checkpoint(&path, &model).unwrap();
    let back = load_checkpoint(&path).unwrap();
    assert_eq!(back.params, model.params);
    assert_eq!(back.relations, model.relations);
    assert_eq!(back.vocab, model.vocab);
    let again = dir.path().join("m2.json");
    save_checkpoint(&again, &back).unwrap();
    assert_eq!(fs::read(&path).unwrap(), fs::read(&again).unwrap());
}

#[test]
fn training_loss_decreases() {
    let splits = gen_synthetic(&SplitSpec::default()).unwrap();
    let (_, hist) = train(&TrainConfig::default(), &splits.train, &splits.validation).unwrap();
    let first = hist.epochs.first().unwrap();
    let last = hist.epochs.last().unwrap();
    assert!(last.total < first.total, "{} → {}", first.total, last.total);
    assert!(last.val_acc_known.unwrap() > 0.9);
}

#[test]
fn summary_matches_reports_on_disk() {
    let preset = ExperimentPreset {
        name: "small".into(),
        dataset: small_spec(),
        config: json!({"epochs": 2, "d_model": 8}).as_object().unwrap().clone(),
        arms: vec![
            Arm::new("adversarial", json!({})),
            Arm::new("mask", json!({"mode": "mask"})),
            Arm::new("baseline", json!({"use_negatives": false})),
        ],
        seeds: vec![0, 1, 2],
    };
    let dir = tempfile::tempdir().unwrap();
    let result = run_experiment(&preset, Some(dir.path())).unwrap();
    assert_eq!(result.runs.len(), 9);

    let summary: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    for arm in ["adversarial", "mask", "baseline"] {
        let reports: Vec<MetricsReport> = (0..3)
            .map(|s| {
                let p = dir.path().join(arm).join(format!("seed-{s}/report.json"));
                serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
            })
            .collect();
        for (key, f) in [
            ("auroc", (|r: &MetricsReport| r.auroc) as fn(&MetricsReport) -> f64),
            ("fpr95", |r| r.fpr95),
            ("acc_open", |r| r.acc_open),
            ("acc_known", |r| r.acc_known),
        ] {
            let xs: Vec<f64> = reports.iter().map(f).collect();
            let mean = xs.iter().sum::<f64>() / 3.0;
            let std = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 3.0).sqrt();
            let got = &summary[arm][key];
            assert!((got["mean"].as_f64().unwrap() - mean).abs() < 1e-12, "{arm} {key}");
            assert!((got["std"].as_f64().unwrap() - std).abs() < 1e-12, "{arm} {key}");
        }
        // history rows parse back
        let hist = fs::read_to_string(dir.path().join(arm).join("seed-0/history.jsonl")).unwrap();
        let steps: Vec<StepRecord> = hist.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
        assert!(!steps.is_empty());
    }
    assert!(summary["baseline"]["delta_s"].is_null());
    assert!(summary["mask"]["delta_s"]["mean"].is_number());
}

#[test]
fn identical_runs_have_zero_std() {
    let preset = ExperimentPreset {
        name: "same".into(),
        dataset: small_spec(),
        config: json!({"epochs": 1, "d_model": 4}).as_object().unwrap().clone(),
        arms: vec![Arm::new("a", json!({}))],
        seeds: vec![7, 7, 7],
    };
    let result = run_experiment(&preset, None).unwrap();
    let s = &result.summary["a"];
    assert_eq!((s.auroc.std, s.fpr95.std, s.acc_open.std), (0.0, 0.0, 0.0));
}

#[test]
fn annotated_corpus_trains_and_bad_dep_path_is_rejected() {
    // an annotated corpus trains through the same path as an unannotated one
    let mut splits = gen_synthetic(&small_spec()).unwrap();
    for inst in &mut splits.train {
        inst.dep_path = Some(vec![inst.head.start(), inst.tail.start()]);
    }
    let cfg = TrainConfig {
        epochs: 1,
        d_model: 4,
        ..TrainConfig::default()
    };
    let (_, hist) = train(&cfg, &splits.train, &splits.validation).unwrap();
    assert!(hist.steps.iter().all(|s| s.total.is_finite()));

    splits.train[0].dep_path = Some(vec![999]);
    assert!(train(&cfg, &splits.train, &splits.validation).is_err());
}

#[test]
fn shipped_presets_load() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/presets");
    let bench = ExperimentPreset::load(format!("{dir}/benchmark.json")).unwrap();
    assert_eq!(bench, ExperimentPreset::benchmark());
    let eps = ExperimentPreset::load(format!("{dir}/epsilon.json")).unwrap();
    assert_eq!(eps.arms.len(), 3);
}
