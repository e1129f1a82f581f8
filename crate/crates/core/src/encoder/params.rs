use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the relation representation is read out of the hidden states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Readout {
    /// Concatenate the hidden states at `[E1]` and `[E2]`.
    #[default]
    Markers,
    /// Mean over positions, duplicated to `2·d`.
    Mean,
    /// Sum over positions, duplicated to `2·d`.
    Sum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub vocab_size: usize,
    pub num_relations: usize,
    pub d_model: usize,
    pub max_len: usize,
    pub depth: usize,
    pub readout: Readout,
    pub use_positions: bool,
}

impl EncoderConfig {
    pub fn new(vocab_size: usize, num_relations: usize) -> Self {
        Self {
            vocab_size,
            num_relations,
            d_model: 32,
            max_len: 64,
            depth: 1,
            readout: Readout::Markers,
            use_positions: true,
        }
    }

    pub fn repr_dim(&self) -> usize {
        2 * self.d_model
    }

    pub fn validate(&self) -> Result<()> {
        if self.depth > 2 {
            return Err(Error::Config(format!("depth {} not in 0..=2", self.depth)));
        }
        if self.d_model == 0 || self.num_relations == 0 || self.vocab_size == 0 || self.max_len == 0
        {
            return Err(Error::Config(
                "d_model, num_relations, vocab_size and max_len must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Weights of one mixer block. Row-vector convention: `y = x · W`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixerBlock {
    pub wq: Array2<f64>,
    pub wk: Array2<f64>,
    pub wv: Array2<f64>,
    pub wo: Array2<f64>,
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
}

impl MixerBlock {
    fn zeros(d: usize) -> Self {
        let m = || Array2::zeros((d, d));
        Self {
            wq: m(),
            wk: m(),
            wv: m(),
            wo: m(),
            w1: m(),
            b1: Array1::zeros(d),
            w2: m(),
            b2: Array1::zeros(d),
        }
    }
}

/// All trainable tensors plus the architecture they belong to.
///
/// The same type doubles as a gradient accumulator (see [`EncoderParams::zeros_like`]).
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderParams {
    pub config: EncoderConfig,
    /// `|V| × d`
    pub embeddings: Array2<f64>,
    /// `max_len × d`
    pub positions: Array2<f64>,
    pub blocks: Vec<MixerBlock>,
    /// `n × 2d`
    pub w_cls: Array2<f64>,
    /// `n`
    pub b_cls: Array1<f64>,
}

/// Half-width of the uniform weight initialization.
pub const INIT_RANGE: f64 = 0.08;

impl EncoderParams {
    pub fn zeros(config: EncoderConfig) -> Self {
        let d = config.d_model;
        Self {
            embeddings: Array2::zeros((config.vocab_size, d)),
            positions: Array2::zeros((config.max_len, d)),
            blocks: (0..config.depth).map(|_| MixerBlock::zeros(d)).collect(),
            w_cls: Array2::zeros((config.num_relations, 2 * d)),
            b_cls: Array1::zeros(config.num_relations),
            config,
        }
    }

    /// Weights uniform in `[-0.08, 0.08]`, biases zero.
    pub fn init(config: EncoderConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = Self::zeros(config);
        for (name, data) in p.named_mut() {
            if is_bias(&name) {
                continue;
            }
            for x in data {
                *x = rng.random_range(-INIT_RANGE..=INIT_RANGE);
            }
        }
        Ok(p)
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.config.clone())
    }

    /// Sets every scalar to zero in place.
    pub fn zero(&mut self) {
        for (_, t) in self.named_mut() {
            t.fill(0.0);
        }
    }

    /// Every tensor as `(name, shape, row-major data)`, in a fixed order.
    pub fn named(&self) -> Vec<(String, Vec<usize>, &[f64])> {
        fn mat(name: String, m: &Array2<f64>) -> (String, Vec<usize>, &[f64]) {
            (name, m.shape().to_vec(), m.as_slice().expect("standard layout"))
        }
        fn vec(name: String, v: &Array1<f64>) -> (String, Vec<usize>, &[f64]) {
            (name, vec![v.len()], v.as_slice().expect("standard layout"))
        }
        let mut out = vec![
            mat("embeddings".into(), &self.embeddings),
            mat("positions".into(), &self.positions),
        ];
        for (i, b) in self.blocks.iter().enumerate() {
            for (n, m) in [
                ("wq", &b.wq),
                ("wk", &b.wk),
                ("wv", &b.wv),
                ("wo", &b.wo),
                ("w1", &b.w1),
                ("w2", &b.w2),
            ] {
                out.push(mat(format!("blocks.{i}.{n}"), m));
            }
            out.push(vec(format!("blocks.{i}.b1"), &b.b1));
            out.push(vec(format!("blocks.{i}.b2"), &b.b2));
        }
        out.push(mat("w_cls".into(), &self.w_cls));
        out.push(vec("b_cls".into(), &self.b_cls));
        out
    }

    /// Mutable counterpart of [`named`](Self::named), same order.
    pub fn named_mut(&mut self) -> Vec<(String, &mut [f64])> {
        let mut out: Vec<(String, &mut [f64])> = vec![
            ("embeddings".into(), self.embeddings.as_slice_mut().unwrap()),
            ("positions".into(), self.positions.as_slice_mut().unwrap()),
        ];
        for (i, b) in self.blocks.iter_mut().enumerate() {
            out.push((format!("blocks.{i}.wq"), b.wq.as_slice_mut().unwrap()));
            out.push((format!("blocks.{i}.wk"), b.wk.as_slice_mut().unwrap()));
            out.push((format!("blocks.{i}.wv"), b.wv.as_slice_mut().unwrap()));
            out.push((format!("blocks.{i}.wo"), b.wo.as_slice_mut().unwrap()));
            out.push((format!("blocks.{i}.w1"), b.w1.as_slice_mut().unwrap()));
            out.push((format!("blocks.{i}.w2"), b.w2.as_slice_mut().unwrap()));
            out.push((format!("blocks.{i}.b1"), b.b1.as_slice_mut().unwrap()));
            out.push((format!("blocks.{i}.b2"), b.b2.as_slice_mut().unwrap()));
        }
        out.push(("w_cls".into(), self.w_cls.as_slice_mut().unwrap()));
        out.push(("b_cls".into(), self.b_cls.as_slice_mut().unwrap()));
        out
    }

    pub fn num_scalars(&self) -> usize {
        self.named().iter().map(|(_, _, d)| d.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.named()
            .iter()
            .all(|(_, _, d)| d.iter().all(|x| x.is_finite()))
    }

    /// Order-sensitive hash of every parameter bit pattern.
    pub fn checksum(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for (_, _, data) in self.named() {
            for x in data {
                for byte in x.to_bits().to_le_bytes() {
                    h ^= byte as u64;
                    h = h.wrapping_mul(0x0000_0100_0000_01b3);
                }
            }
        }
        h
    }
}

fn is_bias(name: &str) -> bool {
    name.ends_with("b1") || name.ends_with("b2") || name == "b_cls"
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_is_seeded_and_bounded() {
        let cfg = EncoderConfig::new(20, 3);
        let a = EncoderParams::init(cfg.clone(), 1).unwrap();
        let b = EncoderParams::init(cfg.clone(), 1).unwrap();
        let c = EncoderParams::init(cfg, 2).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.checksum(), c.checksum());
        for (name, _, data) in a.named() {
            for x in data {
                assert!(x.abs() <= INIT_RANGE);
                if is_bias(&name) {
                    assert_eq!(*x, 0.0);
                }
            }
        }
    }

    #[test]
    fn named_orders_agree() {
        let mut p = EncoderParams::init(EncoderConfig { depth: 2, ..EncoderConfig::new(9, 2) }, 0)
            .unwrap();
        let names: Vec<String> = p.named().into_iter().map(|(n, _, _)| n).collect();
        let mut_names: Vec<String> = p.named_mut().into_iter().map(|(n, _)| n).collect();
        assert_eq!(names, mut_names);
        assert_eq!(names.len(), 2 + 2 * 8 + 2);
    }

    #[test]
    fn depth_above_two_rejected() {
        let cfg = EncoderConfig { depth: 3, ..EncoderConfig::new(9, 2) };
        assert!(EncoderParams::init(cfg, 0).is_err());
    }
}
