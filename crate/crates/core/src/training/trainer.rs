use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{default_ban_k, known_relations, BanList, RelationInstance, TfIdfTable, Vocabulary};
use crate::encoder::{argmax, forward, mark, EncoderParams, MarkedInstance, Model};
use crate::error::{Error, Result};
use crate::synthesis::{synthesize_batch, NegativeInstance, Source, SynthesisContext};

use super::loss::{batch_loss, Known};
use super::optim::{Adam, AdamConfig};
use super::TrainConfig;

/// One optimizer step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub epoch: usize,
    pub l_cls: f64,
    pub l_nota: f64,
    pub total: f64,
    pub delta_s: Option<f64>,
}

/// Per-epoch means over its steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub l_cls: f64,
    pub l_nota: f64,
    pub total: f64,
    pub delta_s: Option<f64>,
    /// Argmax accuracy on the known-relation part of the validation set.
    pub val_acc_known: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub steps: Vec<StepRecord>,
    pub epochs: Vec<EpochRecord>,
}

/// Training-set statistics fixed before the first step.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub vocab: Vocabulary,
    pub relations: Vec<String>,
    pub tfidf: TfIdfTable,
    pub banlist: BanList,
    pub marked: Vec<MarkedInstance>,
    pub labels: Vec<usize>,
}

impl Prepared {
    pub fn context(&self) -> SynthesisContext<'_> {
        SynthesisContext {
            vocab: &self.vocab,
            tfidf: &self.tfidf,
            banlist: &self.banlist,
        }
    }

    pub fn source<'a>(&'a self, train: &'a [RelationInstance], i: usize) -> Source<'a> {
        Source {
            instance: &train[i],
            marked: &self.marked[i],
            relation: self.labels[i],
        }
    }
}

/// Marks every training instance and computes tf-idf and the ban list over
/// the whole training set. Every label must be one of `relations`.
pub fn prepare(
    train: &[RelationInstance],
    vocab: Vocabulary,
    relations: Vec<String>,
    ban_k: Option<usize>,
) -> Result<Prepared> {
    let labels = train
        .iter()
        .map(|inst| {
            relations
                .iter()
                .position(|r| *r == inst.relation)
                .ok_or_else(|| {
                    Error::Invalid(format!(
                        "training label {:?} is not a known relation",
                        inst.relation
                    ))
                })
        })
        .collect::<Result<Vec<_>>>()?;
    let tfidf = TfIdfTable::compute(train, &vocab, &relations)?;
    let banlist = BanList::build(&tfidf, ban_k.unwrap_or_else(|| default_ban_k(vocab.len())));
    let marked = train.iter().map(|inst| mark(inst, &vocab)).collect();
    Ok(Prepared {
        vocab,
        relations,
        tfidf,
        banlist,
        marked,
        labels,
    })
}

/// Trains from scratch. The validation set only feeds the per-epoch
/// diagnostics in the history.
pub fn train(
    config: &TrainConfig,
    train: &[RelationInstance],
    validation: &[RelationInstance],
) -> Result<(Model, TrainHistory)> {
    config.validate()?;
    if train.is_empty() {
        return Err(Error::Invalid("training set is empty".into()));
    }
    if let Some(bad) = train.iter().find(|i| i.is_nota()) {
        return Err(Error::Invalid(format!(
            "training set contains a NOTA instance: {:?}",
            bad.tokens
        )));
    }
    for inst in train {
        inst.validate()?;
    }
    let vocab = Vocabulary::build(train, config.min_count);
    let prep = prepare(train, vocab, known_relations(train), config.ban_k)?;
    let enc = config.encoder_config(prep.vocab.len(), prep.relations.len());
    let mut params = EncoderParams::init(enc, config.seed)?;

    let val: Vec<(MarkedInstance, usize)> = validation
        .iter()
        .filter_map(|inst| {
            let y = prep.relations.iter().position(|r| *r == inst.relation)?;
            Some((mark(inst, &prep.vocab), y))
        })
        .collect();

    let mut opt = Adam::new(
        AdamConfig {
            lr: config.lr,
            beta1: config.beta1,
            beta2: config.beta2,
            eps: config.adam_eps,
        },
        &params,
    );
    // separate streams so batch order does not depend on the synthesis mode
    let mut order_rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut noise_rng = ChaCha8Rng::seed_from_u64(config.seed);
    noise_rng.set_stream(1);

    let mut cache: Vec<Option<NegativeInstance>> = vec![None; train.len()];
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut history = TrainHistory::default();
    let mut grads = params.zeros_like();

    for epoch in 0..config.epochs {
        order.shuffle(&mut order_rng);
        let first_step = history.steps.len();
        for batch in order.chunks(config.batch_size) {
            let negatives = if config.use_negatives {
                let before = params.checksum();
                let negs = synthesis_step(config, &prep, train, &params, batch, &mut cache, &mut noise_rng)?;
                assert_eq!(before, params.checksum(), "synthesis mutated parameters");
                negs
            } else {
                Vec::new()
            };

            let knowns: Vec<Known<'_>> = batch
                .iter()
                .map(|&i| Known {
                    marked: &prep.marked[i],
                    label: prep.labels[i],
                })
                .collect();
            grads.zero();
            let loss = batch_loss(&params, &knowns, &negatives, config.beta, Some(&mut grads))?;
            opt.step(&mut params, &grads)?;
            if !loss.total.is_finite() || !params.is_finite() {
                return Err(Error::Invalid(format!(
                    "training diverged at epoch {epoch}, step {}",
                    history.steps.len()
                )));
            }
            history.steps.push(StepRecord {
                step: history.steps.len(),
                epoch,
                l_cls: loss.l_cls,
                l_nota: loss.l_nota,
                total: loss.total,
                delta_s: loss.delta_s,
            });
        }
        let steps = &history.steps[first_step..];
        let val_acc_known = known_accuracy(&params, &val)?;
        history.epochs.push(epoch_record(epoch, steps, val_acc_known));
    }

    let model = Model {
        params,
        vocab: prep.vocab,
        relations: prep.relations,
    };
    Ok((model, history))
}

fn synthesis_step(
    config: &TrainConfig,
    prep: &Prepared,
    train: &[RelationInstance],
    params: &EncoderParams,
    batch: &[usize],
    cache: &mut [Option<NegativeInstance>],
    rng: &mut ChaCha8Rng,
) -> Result<Vec<NegativeInstance>> {
    let iterative = config.synthesis.iterative;
    let missing: Vec<usize> = batch
        .iter()
        .copied()
        .filter(|&i| iterative || cache[i].is_none())
        .collect();
    if !missing.is_empty() {
        let sources: Vec<Source<'_>> = missing.iter().map(|&i| prep.source(train, i)).collect();
        let fresh = synthesize_batch(params, &sources, prep.context(), &config.synthesis, rng)?;
        if iterative {
            return Ok(fresh);
        }
        for (i, neg) in missing.into_iter().zip(fresh) {
            cache[i] = Some(neg);
        }
    }
    Ok(batch
        .iter()
        .map(|&i| cache[i].clone().expect("negative cached above"))
        .collect())
}

fn known_accuracy(params: &EncoderParams, val: &[(MarkedInstance, usize)]) -> Result<Option<f64>> {
    if val.is_empty() {
        return Ok(None);
    }
    let mut correct = 0usize;
    for (m, y) in val {
        if argmax(forward(params, m)?.logits.view()) == *y {
            correct += 1;
        }
    }
    Ok(Some(correct as f64 / val.len() as f64))
}

fn epoch_record(epoch: usize, steps: &[StepRecord], val_acc_known: Option<f64>) -> EpochRecord {
    let n = steps.len().max(1) as f64;
    let mean = |f: fn(&StepRecord) -> f64| steps.iter().map(f).sum::<f64>() / n;
    let ds: Vec<f64> = steps.iter().filter_map(|s| s.delta_s).collect();
    EpochRecord {
        epoch,
        l_cls: mean(|s| s.l_cls),
        l_nota: mean(|s| s.l_nota),
        total: mean(|s| s.total),
        delta_s: (!ds.is_empty()).then(|| ds.iter().sum::<f64>() / ds.len() as f64),
        val_acc_known,
    }
}
