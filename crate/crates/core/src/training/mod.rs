//! The unknown-aware training loop.
//!
//! Each batch runs two steps. The synthesis step builds one negative per
//! source instance from the current, frozen parameters. The learning step
//! then takes a single Adam step on
//!
//! ```text
//! L = L_cls + β · L_NOTA
//! L_cls  = −(1/B) Σ log p(y_i | x_i)
//! L_NOTA = −(1/B) Σ log σ(s(x_i)) − (1/B) Σ log(1 − σ(s(x'_i)))
//! ```
//!
//! over the knowns `x_i` and negatives `x'_i` jointly. The learning pass does
//! not differentiate through the discrete substitutions.

mod config;
mod loss;
mod optim;
mod trainer;

pub use config::TrainConfig;
pub use loss::{batch_loss, cls_loss, delta_s, negative_score, nota_loss, total_loss, BatchLoss, Known};
pub use optim::{Adam, AdamConfig};
pub use trainer::{prepare, train, EpochRecord, Prepared, StepRecord, TrainHistory};
