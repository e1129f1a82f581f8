//! FPR95 as a function of the substitution ratio ε on the benchmark
//! dataset, three seeds per value.
//!
//! ```text
//! cargo run --release --example epsilon_sweep [-- 0.05 0.1 0.2 0.4 0.6]
//! ```

use openre::experiment::{sweep_epsilon, ExperimentPreset};

fn main() -> openre::Result<()> {
    let mut eps: Vec<f64> = std::env::args()
        .skip(1)
        .map(|a| a.parse().expect("epsilon values must be numbers"))
        .collect();
    if eps.is_empty() {
        eps = vec![0.05, 0.2, 0.6];
    }
    let rows = sweep_epsilon(&ExperimentPreset::benchmark(), &eps, None)?;
    println!("{:>8}  {:>15}  {:>15}", "epsilon", "FPR95", "AUROC");
    for r in rows {
        println!(
            "{:>8}  {:7.2} ± {:5.2}  {:7.2} ± {:5.2}",
            r.epsilon,
            100.0 * r.fpr95.mean,
            100.0 * r.fpr95.std,
            100.0 * r.auroc.mean,
            100.0 * r.auroc.std
        );
    }
    Ok(())
}
