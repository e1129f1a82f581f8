//! Threshold calibration and open-set evaluation for one trained model.
//!
//! `α` is calibrated on the known half of the validation split so that 95%
//! of known instances score above it, then applied to the test split whose
//! unknown relations were never seen in training or validation.
//!
//! ```text
//! cargo run --release --example calibrate_and_evaluate [-- <checkpoint.json> <val.jsonl> <test.jsonl>]
//! ```

use openre::corpus::{gen_synthetic, load_jsonl, SplitSpec};
use openre::encoder::load_checkpoint;
use openre::evaluation::{calibrate_alpha, evaluate, known_scores, score_dataset};
use openre::training::{train, TrainConfig};

fn main() -> openre::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let (model, val, test) = if let [ckpt, val, test] = args.as_slice() {
        (load_checkpoint(ckpt)?, load_jsonl(val)?, load_jsonl(test)?)
    } else {
        let splits = gen_synthetic(&SplitSpec::default())?;
        let (model, _) = train(&TrainConfig::default(), &splits.train, &splits.validation)?;
        (model, splits.validation, splits.test)
    };

    let cal = known_scores(&model, &val)?;
    let alpha = calibrate_alpha(&cal)?;
    let above = cal.iter().filter(|&&s| s > alpha).count();
    println!("α = {alpha:.4} ({above}/{} validation knowns above)", cal.len());

    let scored = score_dataset(&model, &test)?;
    let (known, nota): (Vec<_>, Vec<_>) = scored.iter().partition(|s| s.gold.is_some());
    let mean = |xs: &[&openre::evaluation::Scored]| xs.iter().map(|s| s.score()).sum::<f64>() / xs.len() as f64;
    println!("test mean s: known {:.3}, NOTA {:.3}", mean(&known), mean(&nota));

    let report = evaluate(&model, &test, alpha)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}
