//! Drops one factor of the importance score at a time (attribution, tf-idf,
//! dependency path) and compares detection against the full score.
//!
//! The synthetic corpus has no dependency annotations, so the `dp` factor
//! is uniformly one and its arm matches the full one exactly.
//!
//! ```text
//! cargo run --release --example importance_ablation
//! ```

use openre::experiment::{run_experiment, Arm, ExperimentPreset};
use serde_json::json;

fn main() -> openre::Result<()> {
    let preset = ExperimentPreset {
        name: "importance".into(),
        arms: vec![
            Arm::new("full", json!({})),
            Arm::new("no_attribution", json!({"use_attribution": false})),
            Arm::new("no_tfidf", json!({"use_tfidf": false})),
            Arm::new("no_dp", json!({"use_dp": false})),
            Arm::new("one_shot", json!({"iterative": false})),
        ],
        ..ExperimentPreset::benchmark()
    };
    let result = run_experiment(&preset, None)?;
    println!("{:>15}  {:>14}  {:>14}  {:>14}", "arm", "AUROC", "FPR95", "ACC known");
    for arm in &preset.arms {
        let s = &result.summary[&arm.name];
        let cell = |m: openre::experiment::MeanStd| format!("{:6.2} ± {:5.2}", 100.0 * m.mean, 100.0 * m.std);
        println!("{:>15}  {}  {}  {}", arm.name, cell(s.auroc), cell(s.fpr95), cell(s.acc_known));
    }
    Ok(())
}
