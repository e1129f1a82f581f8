//! Dataset model, JSONL I/O, vocabulary, relation tf-idf, ban lists and the
//! synthetic open-set corpus.

mod instance;
pub mod synthetic;
mod tfidf;
mod vocab;

pub use instance::{load_jsonl, write_jsonl, write_records, RelationInstance, Span, NOTA};
pub use synthetic::{generate as gen_synthetic, SplitSpec, Splits};
pub use tfidf::{default_ban_k, BanList, TfIdfTable};
pub use vocab::*;

/// Sorted, de-duplicated relation labels of a training set.
pub fn known_relations(train: &[RelationInstance]) -> Vec<String> {
    let mut rels: Vec<String> = train.iter().map(|i| i.relation.clone()).collect();
    rels.sort();
    rels.dedup();
    rels
}
