//! Unknown-aware training next to the cross-entropy-only baseline, with the
//! per-epoch loss curve. Optionally saves the trained checkpoint.
//!
//! ```text
//! cargo run --release --example train_unknown_aware [-- <checkpoint.json>]
//! ```

use openre::corpus::{gen_synthetic, SplitSpec};
use openre::encoder::save_checkpoint;
use openre::training::{train, TrainConfig, TrainHistory};

fn curve(name: &str, hist: &TrainHistory) {
    println!("{name}");
    println!("  {:>5} {:>8} {:>8} {:>8} {:>8} {:>8}", "epoch", "L", "L_cls", "L_nota", "Δs", "val acc");
    for e in &hist.epochs {
        println!(
            "  {:>5} {:>8.4} {:>8.4} {:>8.4} {:>8} {:>8.3}",
            e.epoch,
            e.total,
            e.l_cls,
            e.l_nota,
            e.delta_s.map_or("-".into(), |d| format!("{d:.3}")),
            e.val_acc_known.unwrap_or(f64::NAN)
        );
    }
}

fn main() -> openre::Result<()> {
    let splits = gen_synthetic(&SplitSpec::default())?;
    let config = TrainConfig::default();
    let (model, hist) = train(&config, &splits.train, &splits.validation)?;
    curve("adversarial negatives", &hist);

    let baseline = TrainConfig {
        use_negatives: false,
        ..config
    };
    let (_, base_hist) = train(&baseline, &splits.train, &splits.validation)?;
    curve("no negatives", &base_hist);

    if let Some(path) = std::env::args().nth(1) {
        save_checkpoint(&path, &model)?;
        println!("saved {path}");
    }
    Ok(())
}
