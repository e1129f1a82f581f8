//! Runs the built-in benchmark preset (adversarial, baseline, mask and both
//! Gaussian arms over three seeds) and prints a mean ± std table.
//!
//! ```text
//! cargo run --release --example benchmark [-- <out-dir>]
//! ```

use std::path::PathBuf;
use std::time::Instant;

use openre::experiment::{run_experiment_with, ExperimentPreset};

fn main() -> openre::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from);
    let preset = ExperimentPreset::benchmark();
    let start = Instant::now();
    let result = run_experiment_with(&preset, out.as_deref(), |run| {
        let r = &run.report;
        eprintln!(
            "{:>15} seed {}  auroc {:.3}  fpr95 {:.3}  acc_known {:.3}  acc_open {:.3}  Δs {}",
            run.arm,
            run.seed,
            r.auroc,
            r.fpr95,
            r.acc_known,
            r.acc_open,
            r.delta_s.map_or("-".into(), |d| format!("{d:.3}")),
        );
    })?;
    println!("{:>15}  {:>13}  {:>13}  {:>13}  {:>13}  {:>13}", "arm", "AUROC", "FPR95", "ACC known", "ACC open", "Δs");
    for arm in &preset.arms {
        let s = &result.summary[&arm.name];
        let cell = |m: openre::experiment::MeanStd| format!("{:6.2} ± {:4.2}", 100.0 * m.mean, 100.0 * m.std);
        let ds = s.delta_s.map_or("-".into(), |d| format!("{:6.3} ± {:4.2}", d.mean, d.std));
        println!(
            "{:>15}  {}  {}  {}  {}  {:>13}",
            arm.name,
            cell(s.auroc),
            cell(s.fpr95),
            cell(s.acc_known),
            cell(s.acc_open),
            ds
        );
    }
    eprintln!("{:.1}s", start.elapsed().as_secs_f64());
    Ok(())
}
