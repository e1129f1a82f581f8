//! Relation-conditional tf-idf and the substitution ban list.
//!
//! For token `w` and known relation `y`, with `n(w, y)` the number of
//! occurrences of `w` across all training instances labelled `y`:
//!
//! ```text
//! tf(w, y) = n(w, y) / Σ_j n(w_j, y)
//! idf(w)   = ln(|K| / |{y : n(w, y) ≠ 0}|)
//! t(w, y)  = tf(w, y) · idf(w)
//! ```
//!
//! Tokens that never occur in a relation get `t = 0` there; tokens that occur
//! in no relation get an all-zero row.

use std::collections::HashMap;

use ndarray::Array2;

use crate::error::{Error, Result};

use super::{RelationInstance, Vocabulary, RESERVED};

/// Immutable `|V| × |K|` table of `t(w, y)`.
#[derive(Debug, Clone)]
pub struct TfIdfTable {
    tf: Array2<f64>,
    idf: Vec<f64>,
    values: Array2<f64>,
}

impl TfIdfTable {
    /// Counts raw occurrences (duplicates included, entity tokens included)
    /// over the training set. `relations` fixes the column order.
    pub fn compute(
        train: &[RelationInstance],
        vocab: &Vocabulary,
        relations: &[String],
    ) -> Result<Self> {
        let col: HashMap<&str, usize> = relations
            .iter()
            .enumerate()
            .map(|(i, r)| (r.as_str(), i))
            .collect();
        let (v, k) = (vocab.len(), relations.len());
        let mut counts = Array2::<f64>::zeros((v, k));
        let mut seen = vec![false; k];
        for inst in train {
            let y = *col.get(inst.relation.as_str()).ok_or_else(|| {
                Error::Invalid(format!(
                    "training relation {:?} is not a known relation",
                    inst.relation
                ))
            })?;
            seen[y] = true;
            for t in &inst.tokens {
                counts[[vocab.id(t), y]] += 1.0;
            }
        }
        if let Some(y) = seen.iter().position(|s| !s) {
            return Err(Error::Invalid(format!(
                "known relation {:?} has no training instances",
                relations[y]
            )));
        }

        let mut tf = counts.clone();
        for mut column in tf.columns_mut() {
            let total: f64 = column.sum();
            if total > 0.0 {
                column.mapv_inplace(|c| c / total);
            }
        }
        let idf: Vec<f64> = counts
            .rows()
            .into_iter()
            .map(|row| {
                let df = row.iter().filter(|&&c| c != 0.0).count();
                if df == 0 {
                    0.0
                } else {
                    (k as f64 / df as f64).ln()
                }
            })
            .collect();
        let mut values = tf.clone();
        for (w, mut row) in values.rows_mut().into_iter().enumerate() {
            row *= idf[w];
        }
        Ok(Self { tf, idf, values })
    }

    pub fn get(&self, token: usize, relation: usize) -> f64 {
        self.values[[token, relation]]
    }

    pub fn tf(&self, token: usize, relation: usize) -> f64 {
        self.tf[[token, relation]]
    }

    pub fn idf(&self, token: usize) -> f64 {
        self.idf[token]
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn vocab_len(&self) -> usize {
        self.values.nrows()
    }

    pub fn num_relations(&self) -> usize {
        self.values.ncols()
    }

    /// Indices of the `k` highest-scoring tokens for `relation`, ties broken
    /// by lower token index.
    pub fn top_k(&self, relation: usize, k: usize) -> Vec<usize> {
        let column = self.values.column(relation);
        let mut ids: Vec<usize> = (0..column.len()).collect();
        ids.sort_by(|&a, &b| column[b].total_cmp(&column[a]).then(a.cmp(&b)));
        ids.truncate(k);
        ids
    }
}

/// Default per-relation ban size: `min(100, ceil(0.1 · |V|))`.
pub fn default_ban_k(vocab_len: usize) -> usize {
    100.min(vocab_len.div_ceil(10))
}

/// Token indices that may never be used as a substitution target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BanList {
    banned: Vec<bool>,
}

impl BanList {
    /// Union over relations of each relation's top-`k` tf-idf tokens, plus
    /// every reserved token.
    pub fn build(table: &TfIdfTable, k: usize) -> Self {
        let mut banned = vec![false; table.vocab_len()];
        for b in banned.iter_mut().take(RESERVED.len()) {
            *b = true;
        }
        for y in 0..table.num_relations() {
            for id in table.top_k(y, k) {
                banned[id] = true;
            }
        }
        Self { banned }
    }

    /// Ban list over a vocabulary of `vocab_len` tokens holding the reserved
    /// tokens and `ids`.
    pub fn from_ids(vocab_len: usize, ids: impl IntoIterator<Item = usize>) -> Self {
        let mut banned = vec![false; vocab_len];
        for b in banned.iter_mut().take(RESERVED.len()) {
            *b = true;
        }
        for id in ids {
            if id < vocab_len {
                banned[id] = true;
            }
        }
        Self { banned }
    }

    pub fn contains(&self, id: usize) -> bool {
        self.banned.get(id).copied().unwrap_or(false)
    }

    pub fn len(&self) -> usize {
        self.banned.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn vocab_len(&self) -> usize {
        self.banned.len()
    }

    pub fn ids(&self) -> impl Iterator<Item = usize> + '_ {
        self.banned
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Span;

    fn inst(words: &str, rel: &str) -> RelationInstance {
        let tokens: Vec<String> = words.split_whitespace().map(String::from).collect();
        RelationInstance::new(tokens, Span(0, 1), Span(1, 2), rel)
    }

    fn rels(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn idf_of_token_in_one_of_two_relations_is_ln_2() {
        let train = vec![inst("x shared a", "A"), inst("y shared b", "B")];
        let vocab = Vocabulary::build(&train, 1);
        let t = TfIdfTable::compute(&train, &vocab, &rels(&["A", "B"])).unwrap();
        assert!((t.idf(vocab.id("a")) - 2f64.ln()).abs() < 1e-12);
        // appears in every relation
        assert_eq!(t.idf(vocab.id("shared")), 0.0);
        assert_eq!(t.get(vocab.id("shared"), 0), 0.0);
        assert_eq!(t.get(vocab.id("shared"), 1), 0.0);
        // absent from B
        assert_eq!(t.get(vocab.id("a"), 1), 0.0);
    }

    #[test]
    fn tf_is_count_ratio() {
        let train = vec![inst("a a b", "Y"), inst("c d", "Z")];
        let vocab = Vocabulary::build(&train, 1);
        let t = TfIdfTable::compute(&train, &vocab, &rels(&["Y", "Z"])).unwrap();
        assert!((t.tf(vocab.id("a"), 0) - 2.0 / 3.0).abs() < 1e-15);
        assert!((t.tf(vocab.id("b"), 0) - 1.0 / 3.0).abs() < 1e-15);
        assert!((t.get(vocab.id("a"), 0) - 2.0 / 3.0 * 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn unseen_token_row_is_zero() {
        let train = vec![inst("a b", "Y")];
        let vocab = Vocabulary::build(&train, 1);
        let t = TfIdfTable::compute(&train, &vocab, &rels(&["Y"])).unwrap();
        for id in 0..RESERVED.len() {
            assert_eq!(t.get(id, 0), 0.0);
            assert_eq!(t.idf(id), 0.0);
        }
    }

    #[test]
    fn missing_relation_is_an_error() {
        let train = vec![inst("a b", "Y")];
        let vocab = Vocabulary::build(&train, 1);
        assert!(TfIdfTable::compute(&train, &vocab, &rels(&["Y", "Q"])).is_err());
        assert!(TfIdfTable::compute(&train, &vocab, &rels(&["Q"])).is_err());
    }

    #[test]
    fn ban_list_k_zero_and_saturation() {
        let train = vec![inst("a b c", "Y"), inst("d e c", "Z")];
        let vocab = Vocabulary::build(&train, 1);
        let t = TfIdfTable::compute(&train, &vocab, &rels(&["Y", "Z"])).unwrap();
        let ban = BanList::build(&t, 0);
        assert_eq!(ban.ids().collect::<Vec<_>>(), (0..RESERVED.len()).collect::<Vec<_>>());
        let ban = BanList::build(&t, vocab.len());
        assert_eq!(ban.len(), vocab.len());
    }

    #[test]
    fn ban_list_two_relations_k_one() {
        // Y: p p q   Z: r s
        // t(p,Y) = 2/3 ln2 beats t(q,Y) = 1/3 ln2; Z: r and s tie at 1/2 ln2,
        // the lower vocabulary index wins.
        let train = vec![inst("p p q", "Y"), inst("r s", "Z")];
        let vocab = Vocabulary::build(&train, 1);
        let t = TfIdfTable::compute(&train, &vocab, &rels(&["Y", "Z"])).unwrap();
        let ban = BanList::build(&t, 1);
        let want_z = vocab.id("r").min(vocab.id("s"));
        let mut expected: Vec<usize> = (0..RESERVED.len()).collect();
        expected.push(vocab.id("p"));
        expected.push(want_z);
        expected.sort();
        assert_eq!(ban.ids().collect::<Vec<_>>(), expected);
    }

    #[test]
    fn default_k_scales_with_vocab() {
        assert_eq!(default_ban_k(300), 30);
        assert_eq!(default_ban_k(301), 31);
        assert_eq!(default_ban_k(30_000), 100);
        assert_eq!(default_ban_k(0), 0);
    }
}
