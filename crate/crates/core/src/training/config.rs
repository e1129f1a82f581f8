use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::encoder::{EncoderConfig, Readout};
use crate::error::{Error, Result};
use crate::synthesis::SynthesisConfig;

/// Everything needed to reproduce a training run. Serialized as one flat
/// JSON object; the synthesis fields sit at the top level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub beta: f64,
    pub epochs: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub seed: u64,
    /// Off: no negatives are synthesized and only the known half of the NOTA
    /// loss is kept (the energy-score baseline).
    pub use_negatives: bool,
    pub d_model: usize,
    pub depth: usize,
    pub readout: Readout,
    pub use_positions: bool,
    pub max_len: usize,
    pub min_count: usize,
    /// Per-relation ban size; `None` picks `min(100, ceil(|V| / 10))`.
    pub ban_k: Option<usize>,
    #[serde(flatten)]
    pub synthesis: SynthesisConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 16,
            beta: 0.05,
            epochs: 20,
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            seed: 0,
            use_negatives: true,
            d_model: 32,
            depth: 1,
            readout: Readout::Markers,
            use_positions: true,
            max_len: 64,
            min_count: 1,
            ban_k: None,
            synthesis: SynthesisConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(Error::Config(format!("beta {} must be finite and >= 0", self.beta)));
        }
        if self.lr.is_nan() || self.lr <= 0.0 {
            return Err(Error::Config(format!("lr {} must be positive", self.lr)));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(Error::Config(format!("{name} {b} not in [0, 1)")));
            }
        }
        if self.adam_eps.is_nan() || self.adam_eps <= 0.0 {
            return Err(Error::Config("adam_eps must be positive".into()));
        }
        if self.min_count == 0 {
            return Err(Error::Config("min_count must be at least 1".into()));
        }
        self.synthesis.validate()
    }

    pub fn encoder_config(&self, vocab_size: usize, num_relations: usize) -> EncoderConfig {
        EncoderConfig {
            vocab_size,
            num_relations,
            d_model: self.d_model,
            max_len: self.max_len,
            depth: self.depth,
            readout: self.readout,
            use_positions: self.use_positions,
        }
    }

    /// Parses a flat JSON object. Unknown keys are rejected by name.
    pub fn from_value(value: serde_json::Value) -> Result<Self> {
        let obj = value
            .as_object()
            .ok_or_else(|| Error::Config("training config must be a JSON object".into()))?;
        let known = known_keys();
        if let Some(bad) = obj.keys().find(|k| !known.contains(k.as_str())) {
            return Err(Error::Config(format!("unknown config field {bad:?}")));
        }
        let cfg: Self = serde_json::from_value(value)
            .map_err(|e| Error::Config(format!("invalid training config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_value(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

fn known_keys() -> BTreeSet<String> {
    match serde_json::to_value(TrainConfig::default()) {
        Ok(serde_json::Value::Object(m)) => m.into_iter().map(|(k, _)| k).collect(),
        _ => unreachable!("TrainConfig serializes to an object"),
    }
}
