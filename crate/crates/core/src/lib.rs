//! Unknown-aware training for open-set relation classification.
//!
//! A relation classifier trained only on known relations tends to assign
//! confident labels to instances of relations it has never seen. This crate
//! trains a compact entity-marker encoder jointly on
//!
//! * cross-entropy over the known relations, and
//! * a binary sigmoid objective on the negative free energy
//!   `s(x) = log Σ_j exp(logit_j)` that pushes known instances up and
//!   synthesized negatives down.
//!
//! Negatives are synthesized every batch from the current model: tokens are
//! ranked by a normalized gradient attribution reweighted with relation
//! tf-idf and dependency-path priors, and the top fraction is replaced with
//! the vocabulary token whose embedding best aligns with `∇ s`.
//!
//! Module map:
//!
//! | module          | contents                                                 |
//! |-----------------|----------------------------------------------------------|
//! | [`corpus`]      | instances, JSONL I/O, vocabulary, tf-idf, ban list, synthetic splits |
//! | [`encoder`]     | parameters, forward/backward passes, scores, checkpoints |
//! | [`attribution`] | counterfactual and gradient attribution, key-token choice |
//! | [`synthesis`]   | misleading-token search and negative generators          |
//! | [`training`]    | losses, Adam, the unknown-aware training loop            |
//! | [`evaluation`]  | threshold calibration, AUROC, FPR95, open-set accuracy   |
//! | [`experiment`]  | presets, multi-arm / multi-seed runs, ε sweeps           |
//! | [`cli`]         | the `openre` command line                                |
//!
//! Runnable walkthroughs for each capability live under `examples/`.

pub mod attribution;
pub mod cli;
pub mod corpus;
pub mod encoder;
pub mod error;
pub mod evaluation;
pub mod experiment;
pub mod synthesis;
pub mod training;

pub use error::{Error, Result};
