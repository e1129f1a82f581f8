//! The `openre` command line.
//!
//! Exit codes: 0 on success, 1 on a usage error, 2 when the command itself
//! fails.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::corpus::{gen_synthetic, load_jsonl, write_jsonl, write_records, RelationInstance, SplitSpec};
use crate::encoder::{forward, load_checkpoint, save_checkpoint, Model};
use crate::error::{Error, Result};
use crate::evaluation::{calibrate_alpha_at, evaluate, known_scores, Calibration, TARGET_TPR};
use crate::experiment::{run_experiment_with, sweep_epsilon, ExperimentPreset};
use crate::synthesis::{synthesize_tokens, SynthesisConfig};
use crate::training::{prepare, train, TrainConfig};

#[derive(Debug, Parser)]
#[command(name = "openre", version, about = "Unknown-aware training for open-set relation classification")]
pub struct Cli {
    /// Overrides the seed of the dataset spec, training config or preset.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Progress messages on stderr.
    #[arg(long, short, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic open-set corpus (train.jsonl, val.jsonl, test.jsonl).
    GenData {
        /// Split spec JSON; the default benchmark split when omitted.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a model and write its checkpoint.
    Train {
        /// Flat JSON training config; defaults when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        train: PathBuf,
        /// Validation set, used for per-epoch diagnostics only.
        #[arg(long)]
        val: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Per-step loss records as JSONL.
        #[arg(long)]
        history: Option<PathBuf>,
    },
    /// Synthesize negatives from a trained model and dump them as JSONL.
    Synth(SynthArgs),
    /// Calibrate the NOTA threshold on the known instances of a dataset.
    Calibrate {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = TARGET_TPR)]
        tpr: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a model on a dataset with known and NOTA instances.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Threshold; `-inf` and `inf` are accepted.
        #[arg(long, allow_hyphen_values = true, conflicts_with = "calibrate_on")]
        alpha: Option<f64>,
        /// Calibrate the threshold on this dataset instead.
        #[arg(long)]
        calibrate_on: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every arm of a preset for every seed.
    Experiment {
        /// Preset JSON; the built-in benchmark when omitted.
        #[arg(long)]
        preset: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// FPR95 and AUROC for each substitution ratio.
    SweepEpsilon {
        #[arg(long)]
        preset: Option<PathBuf>,
        /// Comma-separated ratios.
        #[arg(long, value_delimiter = ',', required = true)]
        eps: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    /// Training set the model was trained on (for tf-idf and the ban list).
    #[arg(long)]
    train: PathBuf,
    /// Instances to synthesize from; the training set when omitted.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Training config supplying the synthesis fields and ban_k.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// adversarial or mask.
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    out: PathBuf,
    /// Per-token importance breakdown as TSV.
    #[arg(long)]
    explain: Option<PathBuf>,
}

/// Parses `args` (program name first) and runs the command. Returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

pub fn execute(cli: &Cli) -> Result<()> {
    let log = |msg: String| {
        if cli.verbose {
            eprintln!("{msg}");
        }
    };
    match &cli.command {
        Command::GenData { spec, out } => {
            let mut spec = match spec {
                Some(p) => read_json::<SplitSpec>(p)?,
                None => SplitSpec::default(),
            };
            if let Some(s) = cli.seed {
                spec.seed = s;
            }
            let splits = gen_synthetic(&spec)?;
            fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
            write_jsonl(out.join("train.jsonl"), &splits.train)?;
            write_jsonl(out.join("val.jsonl"), &splits.validation)?;
            write_jsonl(out.join("test.jsonl"), &splits.test)?;
            log(format!(
                "wrote {} / {} / {} instances to {}",
                splits.train.len(),
                splits.validation.len(),
                splits.test.len(),
                out.display()
            ));
        }
        Command::Train {
            config,
            train: train_path,
            val,
            out,
            history,
        } => {
            let mut cfg = match config {
                Some(p) => TrainConfig::load(p)?,
                None => TrainConfig::default(),
            };
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            let data = load_jsonl(train_path)?;
            let val = match val {
                Some(p) => load_jsonl(p)?,
                None => Vec::new(),
            };
            let (model, hist) = train(&cfg, &data, &val)?;
            save_checkpoint(out, &model)?;
            if let Some(h) = history {
                write_records(h, &hist.steps)?;
            }
            if let Some(last) = hist.epochs.last() {
                log(format!(
                    "epoch {}: loss {:.4} (cls {:.4}, nota {:.4})",
                    last.epoch, last.total, last.l_cls, last.l_nota
                ));
            }
        }
        Command::Synth(args) => synth(cli, args)?,
        Command::Calibrate {
            checkpoint,
            data,
            tpr,
            out,
        } => {
            if !(*tpr > 0.0 && *tpr <= 1.0) {
                return Err(Error::Config(format!("tpr {tpr} not in (0, 1]")));
            }
            let model = load_checkpoint(checkpoint)?;
            let scores = known_scores(&model, &load_jsonl(data)?)?;
            let alpha = calibrate_alpha_at(&scores, *tpr)?;
            let above = scores.iter().filter(|&&s| s > alpha).count();
            emit(
                out.as_deref(),
                &Calibration {
                    alpha,
                    tpr: *tpr,
                    known: scores.len(),
                    above,
                },
            )?;
        }
        Command::Eval {
            checkpoint,
            data,
            alpha,
            calibrate_on,
            out,
        } => {
            let model = load_checkpoint(checkpoint)?;
            let alpha = match (alpha, calibrate_on) {
                (Some(a), _) => *a,
                (None, Some(p)) => calibrate_alpha_at(&known_scores(&model, &load_jsonl(p)?)?, TARGET_TPR)?,
                (None, None) => {
                    return Err(Error::Config("eval needs --alpha or --calibrate-on".into()));
                }
            };
            let report = evaluate(&model, &load_jsonl(data)?, alpha)?;
            emit(out.as_deref(), &report)?;
        }
        Command::Experiment { preset, out } => {
            let preset = load_preset(preset.as_deref(), cli.seed)?;
            let result = run_experiment_with(&preset, Some(out), |run| {
                log(format!(
                    "{} seed {}: auroc {:.4} fpr95 {:.4} acc_known {:.4}",
                    run.arm, run.seed, run.report.auroc, run.report.fpr95, run.report.acc_known
                ))
            })?;
            emit(None, &result.summary)?;
        }
        Command::SweepEpsilon { preset, eps, out } => {
            let preset = load_preset(preset.as_deref(), cli.seed)?;
            let rows = sweep_epsilon(&preset, eps, out.as_deref())?;
            let mut table = String::from("epsilon\tfpr95_mean\tfpr95_std\tauroc_mean\tauroc_std\n");
            for r in &rows {
                let _ = writeln!(
                    table,
                    "{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}",
                    r.epsilon, r.fpr95.mean, r.fpr95.std, r.auroc.mean, r.auroc.std
                );
            }
            if let Some(dir) = out {
                let path = dir.join("sweep.tsv");
                fs::write(&path, &table).map_err(|e| Error::io(&path, e))?;
            }
            print!("{table}");
        }
    }
    Ok(())
}

fn synth(cli: &Cli, args: &SynthArgs) -> Result<()> {
    let model = load_checkpoint(&args.checkpoint)?;
    let (mut syn, ban_k) = match &args.config {
        Some(p) => {
            let c = TrainConfig::load(p)?;
            (c.synthesis, c.ban_k)
        }
        None => (SynthesisConfig::default(), None),
    };
    if let Some(e) = args.epsilon {
        syn.epsilon = e;
    }
    if let Some(m) = &args.mode {
        syn.mode = serde_json::from_value(serde_json::Value::String(m.clone()))
            .map_err(|_| Error::Config(format!("unknown mode {m:?}")))?;
    }
    syn.validate()?;
    if !syn.mode.is_token_level() {
        return Err(Error::Config(format!(
            "synth writes token-level negatives; mode {:?} works in representation space",
            syn.mode
        )));
    }
    if cli.seed.is_some() && cli.verbose {
        eprintln!("note: token-level synthesis is deterministic; --seed has no effect");
    }
    let train_set = load_jsonl(&args.train)?;
    let data = match &args.data {
        Some(p) => load_jsonl(p)?,
        None => train_set.clone(),
    };
    let prep = prepare(&train_set, model.vocab.clone(), model.relations.clone(), ban_k)?;
    let data_prep = prepare_marks(&model, &data)?;

    #[derive(Serialize)]
    struct Pair<'a> {
        source: &'a RelationInstance,
        negative: RelationInstance,
        substituted: Vec<usize>,
        s_source: f64,
        s_negative: f64,
    }
    let mut pairs = Vec::with_capacity(data.len());
    let mut explain = String::from("instance\tposition\ttoken\ta\tt\tdp\tI\tcandidate\tselected\n");
    for (idx, (inst, (marked, label))) in data.iter().zip(&data_prep).enumerate() {
        let src = crate::synthesis::Source {
            instance: inst,
            marked,
            relation: *label,
        };
        let out = synthesize_tokens(&model.params, src, prep.context(), &syn)?;
        for row in &out.scores {
            let _ = writeln!(
                explain,
                "{idx}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                row.position,
                model.vocab.token(row.token),
                row.attribution,
                row.tfidf,
                row.dp,
                row.importance,
                row.candidate,
                out.key_positions.contains(&row.position)
            );
        }
        pairs.push(Pair {
            source: inst,
            s_source: forward(&model.params, marked)?.score(),
            s_negative: forward(&model.params, &out.negative.marked)?.score(),
            substituted: out.negative.substituted,
            negative: out.negative.instance,
        });
    }
    write_records(&args.out, &pairs)?;
    if let Some(p) = &args.explain {
        fs::write(p, explain).map_err(|e| Error::io(p, e))?;
    }
    if cli.verbose {
        eprintln!("{} negatives ({:?}, ε = {})", pairs.len(), syn.mode, syn.epsilon);
    }
    Ok(())
}

/// Marked instances with relation indices; every label must be known.
fn prepare_marks(model: &Model, data: &[RelationInstance]) -> Result<Vec<(crate::encoder::MarkedInstance, usize)>> {
    data.iter()
        .map(|inst| {
            inst.validate()?;
            let y = model
                .relations
                .iter()
                .position(|r| *r == inst.relation)
                .ok_or_else(|| {
                    Error::Invalid(format!(
                        "synth needs known-relation instances, found {:?}",
                        inst.relation
                    ))
                })?;
            Ok((crate::encoder::mark(inst, &model.vocab), y))
        })
        .collect()
}

fn load_preset(path: Option<&Path>, seed: Option<u64>) -> Result<ExperimentPreset> {
    let mut preset = match path {
        Some(p) => ExperimentPreset::load(p)?,
        None => ExperimentPreset::benchmark(),
    };
    if let Some(s) = seed {
        preset.seeds = vec![s];
    }
    Ok(preset)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

/// Pretty JSON to `out`, or to stdout.
fn emit<T: Serialize>(out: Option<&Path>, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Error::io(p, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
