//! Negative instance synthesis.
//!
//! The adversarial generator replaces the key tokens of a training instance
//! with the allowed vocabulary token whose embedding has the largest dot
//! product with `∇_{w_i} s(x)`, i.e. the substitution that a first-order
//! model predicts will raise the NOTA score the most. Baselines replace key
//! tokens with `[MASK]`, or skip the text altogether and draw Gaussian
//! representations (optionally centred on a known instance).

use ndarray::{Array1, ArrayView1, Axis};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::attribution::{self, ImportanceSwitches, TokenImportance};
use crate::corpus::{BanList, RelationInstance, TfIdfTable, Vocabulary, MASK_ID, NOTA};
use crate::encoder::{encode, EncoderParams, MarkedInstance};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SynthesisMode {
    /// Substitute key tokens with misleading tokens.
    #[default]
    Adversarial,
    /// Substitute key tokens with `[MASK]`.
    Mask,
    /// Pure Gaussian noise in representation space.
    Gaussian,
    /// Gaussian noise added to the representation of the source instance.
    GaussianShift,
}

impl SynthesisMode {
    pub fn is_token_level(self) -> bool {
        matches!(self, SynthesisMode::Adversarial | SynthesisMode::Mask)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthesisConfig {
    /// Fraction of candidate tokens substituted.
    pub epsilon: f64,
    pub mode: SynthesisMode,
    pub use_attribution: bool,
    pub use_tfidf: bool,
    pub use_dp: bool,
    /// Re-synthesize every step from the current model. When off, the
    /// negative built the first time an instance is seen is reused.
    pub iterative: bool,
    /// Noise scale for the Gaussian modes, in representation units.
    pub sigma: f64,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.2,
            mode: SynthesisMode::Adversarial,
            use_attribution: true,
            use_tfidf: true,
            use_dp: true,
            iterative: true,
            sigma: 1.0,
        }
    }
}

impl SynthesisConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(Error::Config(format!("epsilon {} not in (0, 1]", self.epsilon)));
        }
        if self.sigma.is_nan() || self.sigma <= 0.0 {
            return Err(Error::Config(format!("sigma {} must be positive", self.sigma)));
        }
        Ok(())
    }

    pub fn switches(&self) -> ImportanceSwitches {
        ImportanceSwitches {
            use_attribution: self.use_attribution,
            use_tfidf: self.use_tfidf,
            use_dp: self.use_dp,
        }
    }
}

/// A synthesized negative, labelled NOTA.
#[derive(Debug, Clone, PartialEq)]
pub enum NegativeInstance {
    Tokens(TokenNegative),
    Representation(Array1<f64>),
}

/// Token-level negative: same length and entity spans as its source.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenNegative {
    pub instance: RelationInstance,
    pub marked: MarkedInstance,
    /// Substituted source-token indices, in key-token rank order.
    pub substituted: Vec<usize>,
}

/// Read-only corpus statistics used by synthesis.
#[derive(Debug, Clone, Copy)]
pub struct SynthesisContext<'a> {
    pub vocab: &'a Vocabulary,
    pub tfidf: &'a TfIdfTable,
    pub banlist: &'a BanList,
}

/// One training instance prepared for synthesis.
#[derive(Debug, Clone, Copy)]
pub struct Source<'a> {
    pub instance: &'a RelationInstance,
    pub marked: &'a MarkedInstance,
    pub relation: usize,
}

/// Allowed token maximizing `grad · embedding(w_j)`. Banned tokens and the
/// original token are excluded; ties go to the lowest index.
pub fn misleading_token(
    grad: ArrayView1<'_, f64>,
    embeddings: &ndarray::Array2<f64>,
    banlist: &BanList,
    original: usize,
) -> Result<usize> {
    let scores = embeddings.dot(&grad);
    let mut best: Option<(usize, f64)> = None;
    for (j, &score) in scores.iter().enumerate() {
        if j == original || banlist.contains(j) {
            continue;
        }
        if best.is_none_or(|(_, b)| score > b) {
            best = Some((j, score));
        }
    }
    best.map(|(j, _)| j).ok_or_else(|| {
        Error::Config("every vocabulary token is banned from substitution".into())
    })
}

/// Result of synthesizing from one source, with the importance breakdown.
#[derive(Debug, Clone)]
pub struct Synthesized {
    pub negative: TokenNegative,
    pub scores: Vec<TokenImportance>,
    /// Marked positions of the key tokens, in rank order.
    pub key_positions: Vec<usize>,
}

/// Builds a token-level negative (adversarial or mask mode).
pub fn synthesize_tokens(
    params: &EncoderParams,
    src: Source<'_>,
    ctx: SynthesisContext<'_>,
    config: &SynthesisConfig,
) -> Result<Synthesized> {
    if !config.mode.is_token_level() {
        return Err(Error::Config(format!(
            "mode {:?} does not produce token-level negatives",
            config.mode
        )));
    }
    let (scores, grads) = attribution::score_tokens(
        params,
        src.instance,
        src.marked,
        src.relation,
        ctx.tfidf,
        config.switches(),
    )?;
    let importance: Vec<f64> = scores.iter().map(|s| s.importance).collect();
    let cands = attribution::candidates(src.instance, src.marked);
    let keys = attribution::select_key_tokens(&importance, config.epsilon, &cands)?;

    let mut marked = src.marked.clone();
    let mut instance = src.instance.clone();
    instance.relation = NOTA.to_string();
    let mut substituted = Vec::with_capacity(keys.len());
    for &pos in &keys {
        let new_id = match config.mode {
            SynthesisMode::Mask => MASK_ID,
            _ => misleading_token(grads.row(pos), &params.embeddings, ctx.banlist, src.marked.ids[pos])?,
        };
        let i = src.marked.source[pos].expect("candidates are never markers");
        marked.ids[pos] = new_id;
        instance.tokens[i] = ctx.vocab.token(new_id).to_string();
        substituted.push(i);
    }
    Ok(Synthesized {
        negative: TokenNegative {
            instance,
            marked,
            substituted,
        },
        scores,
        key_positions: keys,
    })
}

/// `σ·z` (no anchor) or `anchor + σ·z`, with `z` standard normal.
pub fn gaussian_negative<R: Rng + ?Sized>(
    dim: usize,
    rng: &mut R,
    sigma: f64,
    anchor: Option<&Array1<f64>>,
) -> Result<Array1<f64>> {
    if sigma.is_nan() || sigma <= 0.0 {
        return Err(Error::Config(format!("sigma {sigma} must be positive")));
    }
    if let Some(a) = anchor {
        if a.len() != dim {
            return Err(Error::Shape(format!("anchor length {} != {dim}", a.len())));
        }
    }
    let noise = Array1::from_shape_fn(dim, |_| sigma * rng.sample::<f64, _>(StandardNormal));
    Ok(match anchor {
        Some(a) => a + &noise,
        None => noise,
    })
}

/// One negative per source, from the current parameters. Parameters are
/// only read.
pub fn synthesize_batch<R: Rng + ?Sized>(
    params: &EncoderParams,
    batch: &[Source<'_>],
    ctx: SynthesisContext<'_>,
    config: &SynthesisConfig,
    rng: &mut R,
) -> Result<Vec<NegativeInstance>> {
    if batch.is_empty() {
        return Err(Error::Invalid("empty batch".into()));
    }
    let dim = params.config.repr_dim();
    batch
        .iter()
        .map(|src| match config.mode {
            SynthesisMode::Adversarial | SynthesisMode::Mask => {
                synthesize_tokens(params, *src, ctx, config).map(|s| NegativeInstance::Tokens(s.negative))
            }
            SynthesisMode::Gaussian => {
                gaussian_negative(dim, rng, config.sigma, None).map(NegativeInstance::Representation)
            }
            SynthesisMode::GaussianShift => {
                let anchor = encode(params, src.marked)?;
                gaussian_negative(dim, rng, config.sigma, Some(&anchor))
                    .map(NegativeInstance::Representation)
            }
        })
        .collect()
}

/// Scores of every vocabulary token for position `pos`: `E · ∇_{w_pos} s`.
pub fn substitution_scores(
    embeddings: &ndarray::Array2<f64>,
    grads: &ndarray::Array2<f64>,
    pos: usize,
) -> Array1<f64> {
    embeddings.dot(&grads.index_axis(Axis(0), pos))
}
