use serde::{Deserialize, Serialize};

use crate::encoder::EncoderParams;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Adam with bias correction. Moments are stored as parameter-shaped
/// tensors.
#[derive(Debug, Clone)]
pub struct Adam {
    pub config: AdamConfig,
    m: EncoderParams,
    v: EncoderParams,
    t: u64,
}

impl Adam {
    pub fn new(config: AdamConfig, like: &EncoderParams) -> Self {
        Self {
            config,
            m: like.zeros_like(),
            v: like.zeros_like(),
            t: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn first_moment(&self) -> &EncoderParams {
        &self.m
    }

    pub fn second_moment(&self) -> &EncoderParams {
        &self.v
    }

    pub fn step(&mut self, params: &mut EncoderParams, grads: &EncoderParams) -> Result<()> {
        if params.config != self.m.config || grads.config != self.m.config {
            return Err(Error::Shape(
                "parameter, gradient and optimizer shapes disagree".into(),
            ));
        }
        self.t += 1;
        let AdamConfig { lr, beta1, beta2, eps } = self.config;
        let c1 = 1.0 - beta1.powi(self.t as i32);
        let c2 = 1.0 - beta2.powi(self.t as i32);
        let tensors = params
            .named_mut()
            .into_iter()
            .zip(grads.named())
            .zip(self.m.named_mut())
            .zip(self.v.named_mut());
        for ((((_, p), (_, _, g)), (_, m)), (_, v)) in tensors {
            for i in 0..p.len() {
                m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
                v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}
