//! JSON checkpoints:
//!
//! ```text
//! {"version": 1,
//!  "config": {<encoder config>, "vocab": [...], "relations": [...]},
//!  "tensors": {"<name>": {"shape": [...], "data": [f64, ...]}, ...}}
//! ```
//!
//! Tensors are flattened row-major. Keys are written in sorted order so equal
//! models produce byte-identical files.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Vocabulary;
use crate::error::{Error, Result};

use super::{EncoderConfig, EncoderParams};

pub const CHECKPOINT_VERSION: u32 = 1;

/// A trained encoder together with the vocabulary and relation labels it
/// was trained with.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub params: EncoderParams,
    pub vocab: Vocabulary,
    pub relations: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct CheckpointConfig {
    #[serde(flatten)]
    encoder: EncoderConfig,
    vocab: Vec<String>,
    relations: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct TensorData {
    shape: Vec<usize>,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    version: u32,
    config: CheckpointConfig,
    tensors: BTreeMap<String, TensorData>,
}

impl Model {
    pub fn to_json(&self) -> Result<String> {
        let tensors = self
            .params
            .named()
            .into_iter()
            .map(|(name, shape, data)| {
                (
                    name,
                    TensorData {
                        shape,
                        data: data.to_vec(),
                    },
                )
            })
            .collect();
        let ckpt = Checkpoint {
            version: CHECKPOINT_VERSION,
            config: CheckpointConfig {
                encoder: self.params.config.clone(),
                vocab: self.vocab.tokens().to_vec(),
                relations: self.relations.clone(),
            },
            tensors,
        };
        Ok(serde_json::to_string(&ckpt)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ckpt: Checkpoint = serde_json::from_str(text)?;
        if ckpt.version != CHECKPOINT_VERSION {
            return Err(Error::Config(format!(
                "unsupported checkpoint version {}",
                ckpt.version
            )));
        }
        let cfg = ckpt.config.encoder;
        cfg.validate()?;
        let vocab = Vocabulary::from_tokens(ckpt.config.vocab)?;
        if vocab.len() != cfg.vocab_size || ckpt.config.relations.len() != cfg.num_relations {
            return Err(Error::Config(
                "checkpoint vocabulary or relation list disagrees with config".into(),
            ));
        }
        let mut params = EncoderParams::zeros(cfg);
        let expected: Vec<(String, Vec<usize>)> = params
            .named()
            .into_iter()
            .map(|(n, s, _)| (n, s))
            .collect();
        let mut tensors = ckpt.tensors;
        for ((name, slot), (_, shape)) in params.named_mut().into_iter().zip(expected) {
            let t = tensors
                .remove(&name)
                .ok_or_else(|| Error::Config(format!("checkpoint is missing tensor {name}")))?;
            if t.shape != shape || t.data.len() != slot.len() {
                return Err(Error::Shape(format!(
                    "tensor {name}: expected shape {shape:?}, found {:?}",
                    t.shape
                )));
            }
            slot.copy_from_slice(&t.data);
        }
        if let Some(extra) = tensors.keys().next() {
            return Err(Error::Config(format!("unexpected tensor {extra}")));
        }
        Ok(Model {
            params,
            vocab,
            relations: ckpt.config.relations,
        })
    }
}

pub fn save_checkpoint(path: impl AsRef<Path>, model: &Model) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, model.to_json()?).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Model> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Model::from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{RelationInstance, Span};

    fn model() -> Model {
        let inst = RelationInstance::new(
            vec!["a".into(), "b".into(), "c".into()],
            Span(0, 1),
            Span(2, 3),
            "r",
        );
        let vocab = Vocabulary::build(&[inst], 1);
        let cfg = EncoderConfig {
            d_model: 3,
            max_len: 8,
            depth: 2,
            ..EncoderConfig::new(vocab.len(), 2)
        };
        Model {
            params: EncoderParams::init(cfg, 11).unwrap(),
            vocab,
            relations: vec!["r".into(), "s".into()],
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let m = model();
        let text = m.to_json().unwrap();
        let back = Model::from_json(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_json().unwrap(), text);
    }

    #[test]
    fn layout_matches_schema() {
        let v: serde_json::Value = serde_json::from_str(&model().to_json().unwrap()).unwrap();
        assert_eq!(v["version"], 1);
        assert_eq!(v["config"]["depth"], 2);
        assert_eq!(v["tensors"]["w_cls"]["shape"], serde_json::json!([2, 6]));
        assert_eq!(v["tensors"]["w_cls"]["data"].as_array().unwrap().len(), 12);
        assert_eq!(v["tensors"]["blocks.1.b2"]["shape"], serde_json::json!([3]));
    }

    #[test]
    fn wrong_shape_rejected() {
        let mut v: serde_json::Value =
            serde_json::from_str(&model().to_json().unwrap()).unwrap();
        v["tensors"]["b_cls"]["shape"] = serde_json::json!([3]);
        assert!(Model::from_json(&v.to_string()).is_err());
        let mut v: serde_json::Value =
            serde_json::from_str(&model().to_json().unwrap()).unwrap();
        v["version"] = serde_json::json!(2);
        assert!(Model::from_json(&v.to_string()).is_err());
    }
}
