//! Compact entity-marker encoder with a linear relation head.
//!
//! Token and (optional) position embeddings feed `depth` mixer blocks, each a
//! single-head self-attention layer followed by a tanh feed-forward layer,
//! both residual. The relation representation concatenates the hidden states
//! at the `[E1]` and `[E2]` markers (or pools all positions), and a linear
//! head produces one logit per known relation.
//!
//! Gradients are computed by a hand-written reverse pass over the cached
//! forward activations, both for parameters and for the per-position input
//! token embeddings.

mod checkpoint;
mod forward;
mod markers;
mod params;
mod scores;

pub use checkpoint::{load_checkpoint, save_checkpoint, Model, CHECKPOINT_VERSION};
pub use forward::{
    class_logits, encode, forward, forward_inputs, grad_embeddings, head_backward, Forward,
    Objective,
};
pub use markers::{mark, MarkedInstance};
pub use params::{EncoderConfig, EncoderParams, MixerBlock, Readout};
pub(crate) use scores::softplus;
pub use scores::{argmax, decide, log_sigmoid, logsumexp, nota_score, sigmoid, softmax, Decision};
