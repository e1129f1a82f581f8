//! Reproducible multi-arm, multi-seed experiments.
//!
//! A preset fixes the dataset (through its [`SplitSpec`] seed), a base
//! training config, the arms that override it, and the training seeds. Each
//! (arm, seed) run trains, calibrates `α` on the known part of the
//! validation split, and evaluates on the test split. Runs are sequential
//! and every output is a pure function of the preset.
//!
//! On disk:
//!
//! ```text
//! <out>/<arm>/seed-<s>/checkpoint.json
//! <out>/<arm>/seed-<s>/history.jsonl
//! <out>/<arm>/seed-<s>/report.json
//! <out>/summary.json
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::corpus::{gen_synthetic, write_records, SplitSpec, Splits};
use crate::encoder::save_checkpoint;
use crate::error::{Error, Result};
use crate::evaluation::{calibrate_alpha, evaluate, known_scores, MetricsReport};
use crate::training::{train, TrainConfig, TrainHistory};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Arm {
    pub name: String,
    /// Training-config fields overriding the preset's base config.
    #[serde(default)]
    pub config: Map<String, Value>,
}

impl Arm {
    pub fn new(name: &str, config: Value) -> Self {
        let config = match config {
            Value::Object(m) => m,
            _ => Map::new(),
        };
        Self {
            name: name.to_string(),
            config,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPreset {
    pub name: String,
    pub dataset: SplitSpec,
    #[serde(default)]
    pub config: Map<String, Value>,
    pub arms: Vec<Arm>,
    pub seeds: Vec<u64>,
}

impl ExperimentPreset {
    /// The main comparison: adversarial negatives against the no-negative
    /// baseline, `[MASK]` substitution and both Gaussian variants.
    /// 6 known / 3 / 3 relations, 50 instances each, 20 epochs, seeds 0..3.
    pub fn benchmark() -> Self {
        Self {
            name: "benchmark".into(),
            dataset: SplitSpec::default(),
            config: Map::new(),
            arms: vec![
                Arm::new("adversarial", json!({})),
                Arm::new("baseline", json!({"use_negatives": false})),
                Arm::new("mask", json!({"mode": "mask"})),
                Arm::new("gaussian", json!({"mode": "gaussian"})),
                Arm::new("gaussian_shift", json!({"mode": "gaussian_shift"})),
            ],
            seeds: vec![0, 1, 2],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.arms.is_empty() {
            return Err(Error::Config("preset has no arms".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("preset has no seeds".into()));
        }
        let mut names: Vec<&str> = self.arms.iter().map(|a| a.name.as_str()).collect();
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Config(format!("duplicate arm name {:?}", w[0])));
        }
        if let Some(a) = self.arms.iter().find(|a| !valid_dir_name(&a.name)) {
            return Err(Error::Config(format!("arm name {:?} is not a plain file name", a.name)));
        }
        self.dataset.validate()?;
        for arm in &self.arms {
            self.train_config(arm, self.seeds[0])?;
        }
        Ok(())
    }

    /// Base config, then arm overrides, then the seed.
    pub fn train_config(&self, arm: &Arm, seed: u64) -> Result<TrainConfig> {
        let mut merged = self.config.clone();
        merged.extend(arm.config.clone());
        merged.insert("seed".into(), json!(seed));
        TrainConfig::from_value(Value::Object(merged))
            .map_err(|e| Error::Config(format!("arm {:?}: {e}", arm.name)))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let preset: Self = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        preset.validate()?;
        Ok(preset)
    }
}

fn valid_dir_name(name: &str) -> bool {
    !name.is_empty()
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
        && name != "."
        && name != ".."
}

/// Result of one (arm, seed) run.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub arm: String,
    pub seed: u64,
    pub report: MetricsReport,
    pub history: TrainHistory,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Population standard deviation over seeds.
    pub std: f64,
}

impl MeanStd {
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        // offset from the first value so identical inputs give exactly std 0
        let x0 = xs.first().copied().unwrap_or(f64::NAN);
        let mean = x0 + xs.iter().map(|x| x - x0).sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        Self {
            mean,
            std: var.sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmSummary {
    pub runs: usize,
    pub acc_open: MeanStd,
    pub acc_known: MeanStd,
    pub auroc: MeanStd,
    pub fpr95: MeanStd,
    /// Present when every run of the arm trained with negatives.
    pub delta_s: Option<MeanStd>,
}

impl ArmSummary {
    pub fn of(reports: &[&MetricsReport]) -> Self {
        let pick = |f: fn(&MetricsReport) -> f64| MeanStd::of(&reports.iter().map(|r| f(r)).collect::<Vec<_>>());
        let ds: Option<Vec<f64>> = reports.iter().map(|r| r.delta_s).collect();
        Self {
            runs: reports.len(),
            acc_open: pick(|r| r.acc_open),
            acc_known: pick(|r| r.acc_known),
            auroc: pick(|r| r.auroc),
            fpr95: pick(|r| r.fpr95),
            delta_s: ds.map(|d| MeanStd::of(&d)),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub runs: Vec<RunResult>,
    /// Keyed by arm name.
    pub summary: BTreeMap<String, ArmSummary>,
}

impl ExperimentResult {
    pub fn arm(&self, name: &str) -> impl Iterator<Item = &RunResult> {
        let name = name.to_string();
        self.runs.iter().filter(move |r| r.arm == name)
    }
}

/// Trains, calibrates and evaluates one arm for one seed.
pub fn run_one(preset: &ExperimentPreset, splits: &Splits, arm: &Arm, seed: u64, out: Option<&Path>) -> Result<RunResult> {
    let config = preset.train_config(arm, seed)?;
    let context = |e: Error| Error::Invalid(format!("arm {:?} seed {seed}: {e}", arm.name));
    let (model, history) = train(&config, &splits.train, &splits.validation).map_err(context)?;
    let alpha = calibrate_alpha(&known_scores(&model, &splits.validation)?).map_err(context)?;
    let mut report = evaluate(&model, &splits.test, alpha).map_err(context)?;
    report.delta_s = history.epochs.last().and_then(|e| e.delta_s);

    if let Some(out) = out {
        let dir = out.join(&arm.name).join(format!("seed-{seed}"));
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        save_checkpoint(dir.join("checkpoint.json"), &model)?;
        write_records(dir.join("history.jsonl"), &history.steps)?;
        write_json(&dir.join("report.json"), &report)?;
    }
    Ok(RunResult {
        arm: arm.name.clone(),
        seed,
        report,
        history,
    })
}

/// Runs every arm for every seed, in preset order.
pub fn run_experiment(preset: &ExperimentPreset, out: Option<&Path>) -> Result<ExperimentResult> {
    run_experiment_with(preset, out, |_| {})
}

/// [`run_experiment`] with a callback after each run (for progress output).
pub fn run_experiment_with(
    preset: &ExperimentPreset,
    out: Option<&Path>,
    mut on_run: impl FnMut(&RunResult),
) -> Result<ExperimentResult> {
    preset.validate()?;
    let splits = gen_synthetic(&preset.dataset)?;
    let mut runs = Vec::with_capacity(preset.arms.len() * preset.seeds.len());
    for arm in &preset.arms {
        for &seed in &preset.seeds {
            let run = run_one(preset, &splits, arm, seed, out)?;
            on_run(&run);
            runs.push(run);
        }
    }
    let summary: BTreeMap<String, ArmSummary> = preset
        .arms
        .iter()
        .map(|arm| {
            let reports: Vec<&MetricsReport> = runs.iter().filter(|r| r.arm == arm.name).map(|r| &r.report).collect();
            (arm.name.clone(), ArmSummary::of(&reports))
        })
        .collect();
    if let Some(out) = out {
        write_json(&out.join("summary.json"), &summary)?;
    }
    Ok(ExperimentResult { runs, summary })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub epsilon: f64,
    pub fpr95: MeanStd,
    pub auroc: MeanStd,
}

/// One arm per `ε` on top of the preset's base config (its arms are
/// ignored). Rows follow `epsilons`, duplicates included.
pub fn sweep_epsilon(preset: &ExperimentPreset, epsilons: &[f64], out: Option<&Path>) -> Result<Vec<SweepRow>> {
    if epsilons.is_empty() {
        return Err(Error::Config("empty epsilon list".into()));
    }
    let sweep = ExperimentPreset {
        arms: epsilons
            .iter()
            .enumerate()
            .map(|(i, &e)| Arm::new(&format!("eps-{i}-{e}"), json!({"epsilon": e})))
            .collect(),
        ..preset.clone()
    };
    let result = run_experiment(&sweep, out)?;
    Ok(sweep
        .arms
        .iter()
        .zip(epsilons)
        .map(|(arm, &epsilon)| {
            let s = &result.summary[&arm.name];
            SweepRow {
                epsilon,
                fpr95: s.fpr95,
                auroc: s.auroc,
            }
        })
        .collect())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ExperimentPreset {
        ExperimentPreset {
            name: "tiny".into(),
            dataset: SplitSpec {
                known: 2,
                val_unknown: 1,
                test_unknown: 1,
                per_relation: 8,
                ..SplitSpec::default()
            },
            config: json!({"epochs": 1, "d_model": 4}).as_object().unwrap().clone(),
            arms: vec![Arm::new("a", json!({})), Arm::new("b", json!({"use_negatives": false}))],
            seeds: vec![0, 1],
        }
    }

    #[test]
    fn mean_std_population() {
        let m = MeanStd::of(&[1.0, 3.0]);
        assert_eq!((m.mean, m.std), (2.0, 1.0));
        assert_eq!(MeanStd::of(&[0.4; 3]).std, 0.0);
    }

    #[test]
    fn override_order() {
        let mut p = tiny();
        p.config.insert("epsilon".into(), json!(0.5));
        let arm = Arm::new("x", json!({"epsilon": 0.3, "seed": 99}));
        let c = p.train_config(&arm, 7).unwrap();
        assert_eq!(c.synthesis.epsilon, 0.3);
        assert_eq!(c.seed, 7);
        assert_eq!(c.epochs, 1);
    }

    #[test]
    fn preset_validation() {
        let mut p = tiny();
        p.arms.clear();
        assert!(p.validate().is_err());
        let mut p = tiny();
        p.seeds.clear();
        assert!(p.validate().is_err());
        let mut p = tiny();
        p.arms[1].name = "a".into();
        assert!(p.validate().is_err());
        let mut p = tiny();
        p.arms[0].name = "../up".into();
        assert!(p.validate().is_err());
        let mut p = tiny();
        p.arms[0].config.insert("bogus".into(), json!(1));
        assert!(p.validate().unwrap_err().to_string().contains("bogus"));
    }

    #[test]
    fn summary_matches_runs() {
        let r = run_experiment(&tiny(), None).unwrap();
        assert_eq!(r.runs.len(), 4);
        let a: Vec<f64> = r.arm("a").map(|x| x.report.auroc).collect();
        assert!((r.summary["a"].auroc.mean - (a[0] + a[1]) / 2.0).abs() < 1e-15);
        assert!(r.summary["a"].delta_s.is_some());
        assert!(r.summary["b"].delta_s.is_none());
    }

    #[test]
    fn sweep_rows_follow_list() {
        let mut p = tiny();
        p.seeds = vec![0];
        let rows = sweep_epsilon(&p, &[0.2, 0.2, 0.5], None).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0], SweepRow { epsilon: 0.2, ..rows[1] });
        assert_eq!(rows[2].epsilon, 0.5);
    }
}
