//! Threshold calibration and open-set metrics.
//!
//! Thresholds use strictly-greater semantics throughout: an instance counts
//! as known iff `s(x) > α`. Candidate thresholds are the observed scores plus
//! `−∞`, so calibration is exact and needs no interpolation.

use ndarray::Array1;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::corpus::RelationInstance;
use crate::encoder::{argmax, decide, forward, mark, nota_score, Decision, Model};
use crate::error::{Error, Result};

/// Known-instance true positive rate targeted by calibration.
pub const TARGET_TPR: f64 = 0.95;

/// Largest `α ∈ {−∞} ∪ scores` keeping at least `tpr` of `scores` strictly
/// above it.
pub fn calibrate_alpha_at(scores: &[f64], tpr: f64) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::Invalid("cannot calibrate on zero scores".into()));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Invalid("NaN score".into()));
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    // the slack only absorbs rounding in tpr·n
    let needed = tpr * n as f64 - 1e-9;
    let mut best = f64::NEG_INFINITY;
    let mut i = 0;
    while i < n {
        let v = sorted[i];
        let mut j = i;
        while j < n && sorted[j] == v {
            j += 1;
        }
        // j scores are ≤ v
        if (n - j) as f64 >= needed {
            best = v;
        } else {
            break;
        }
        i = j;
    }
    Ok(best)
}

/// [`calibrate_alpha_at`] with the 95% target.
pub fn calibrate_alpha(scores: &[f64]) -> Result<f64> {
    calibrate_alpha_at(scores, TARGET_TPR)
}

/// Probability that a known score beats a NOTA score, ties counted as half,
/// computed from midranks.
pub fn auroc(known: &[f64], nota: &[f64]) -> Result<f64> {
    if known.is_empty() || nota.is_empty() {
        return Err(Error::Invalid("AUROC needs known and NOTA scores".into()));
    }
    let mut all: Vec<(f64, bool)> = known
        .iter()
        .map(|&s| (s, true))
        .chain(nota.iter().map(|&s| (s, false)))
        .collect();
    if all.iter().any(|(s, _)| s.is_nan()) {
        return Err(Error::Invalid("NaN score".into()));
    }
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j < all.len() && all[j].0 == all[i].0 {
            j += 1;
        }
        // ranks i+1..=j share their mean
        let mid = (i + 1 + j) as f64 / 2.0;
        rank_sum += mid * all[i..j].iter().filter(|(_, k)| *k).count() as f64;
        i = j;
    }
    let (nk, nn) = (known.len() as f64, nota.len() as f64);
    Ok((rank_sum - nk * (nk + 1.0) / 2.0) / (nk * nn))
}

/// Fraction of NOTA scores strictly above the threshold calibrated on the
/// known scores.
pub fn fpr_at_95_tpr(known: &[f64], nota: &[f64]) -> Result<f64> {
    if nota.is_empty() {
        return Err(Error::Invalid("FPR95 needs NOTA scores".into()));
    }
    let alpha = calibrate_alpha(known)?;
    Ok(nota.iter().filter(|&&s| s > alpha).count() as f64 / nota.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    /// Accuracy over the known relations plus NOTA under `alpha`.
    pub acc_open: f64,
    /// Argmax accuracy over known-labelled instances; ignores `alpha`.
    pub acc_known: f64,
    pub auroc: f64,
    pub fpr95: f64,
    /// Infinite thresholds are written as the strings `"-inf"` / `"inf"`.
    #[serde(serialize_with = "ser_threshold", deserialize_with = "de_threshold")]
    pub alpha: f64,
    pub delta_s: Option<f64>,
}

/// Output of threshold calibration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    #[serde(serialize_with = "ser_threshold", deserialize_with = "de_threshold")]
    pub alpha: f64,
    /// Target true positive rate.
    pub tpr: f64,
    /// Known instances calibrated on.
    pub known: usize,
    /// How many of them score strictly above `alpha`.
    pub above: usize,
}

fn ser_threshold<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else if *v > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_str("-inf")
    }
}

fn de_threshold<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }
    match Repr::deserialize(d)? {
        Repr::Num(v) => Ok(v),
        Repr::Str(s) if s == "-inf" => Ok(f64::NEG_INFINITY),
        Repr::Str(s) if s == "inf" => Ok(f64::INFINITY),
        Repr::Str(s) => Err(serde::de::Error::custom(format!("bad threshold {s:?}"))),
    }
}

/// Logits of one evaluated instance; `gold` is `None` for NOTA.
#[derive(Debug, Clone, PartialEq)]
pub struct Scored {
    pub gold: Option<usize>,
    pub logits: Array1<f64>,
}

impl Scored {
    pub fn score(&self) -> f64 {
        nota_score(self.logits.view())
    }
}

/// Labels outside the model's relation list (including `NOTA`) count as
/// NOTA.
pub fn score_dataset(model: &Model, data: &[RelationInstance]) -> Result<Vec<Scored>> {
    data.iter()
        .map(|inst| {
            let gold = model.relations.iter().position(|r| *r == inst.relation);
            let logits = forward(&model.params, &mark(inst, &model.vocab))?.logits;
            Ok(Scored { gold, logits })
        })
        .collect()
}

/// Known-instance scores of a dataset, for calibration.
pub fn known_scores(model: &Model, data: &[RelationInstance]) -> Result<Vec<f64>> {
    Ok(score_dataset(model, data)?
        .iter()
        .filter(|s| s.gold.is_some())
        .map(Scored::score)
        .collect())
}

pub fn evaluate(model: &Model, data: &[RelationInstance], alpha: f64) -> Result<MetricsReport> {
    report(&score_dataset(model, data)?, alpha)
}

/// Metrics from precomputed logits.
pub fn report(scored: &[Scored], alpha: f64) -> Result<MetricsReport> {
    if scored.is_empty() {
        return Err(Error::Invalid("empty evaluation set".into()));
    }
    let mut open_correct = 0usize;
    let mut known_correct = 0usize;
    let (mut known, mut nota) = (Vec::new(), Vec::new());
    for s in scored {
        let ok = match (decide(s.logits.view(), alpha), s.gold) {
            (Decision::Nota, None) => true,
            (Decision::Relation(r), Some(g)) => r == g,
            _ => false,
        };
        open_correct += ok as usize;
        match s.gold {
            Some(g) => {
                known_correct += (argmax(s.logits.view()) == g) as usize;
                known.push(s.score());
            }
            None => nota.push(s.score()),
        }
    }
    if known.is_empty() || nota.is_empty() {
        return Err(Error::Invalid(
            "evaluation set needs both known-relation and NOTA instances".into(),
        ));
    }
    Ok(MetricsReport {
        acc_open: open_correct as f64 / scored.len() as f64,
        acc_known: known_correct as f64 / known.len() as f64,
        auroc: auroc(&known, &nota)?,
        fpr95: fpr_at_95_tpr(&known, &nota)?,
        alpha,
        delta_s: None,
    })
}
