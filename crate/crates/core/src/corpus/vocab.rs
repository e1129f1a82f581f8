use std::collections::HashMap;

use crate::error::{Error, Result};

use super::RelationInstance;

pub const PAD: &str = "[PAD]";
pub const UNK: &str = "[UNK]";
pub const MASK: &str = "[MASK]";
pub const E1_START: &str = "[E1]";
pub const E1_END: &str = "[/E1]";
pub const E2_START: &str = "[E2]";
pub const E2_END: &str = "[/E2]";

/// Reserved tokens, in index order.
pub const RESERVED: [&str; 7] = [PAD, UNK, MASK, E1_START, E1_END, E2_START, E2_END];

pub const PAD_ID: usize = 0;
pub const UNK_ID: usize = 1;
pub const MASK_ID: usize = 2;
pub const E1_START_ID: usize = 3;
pub const E1_END_ID: usize = 4;
pub const E2_START_ID: usize = 5;
pub const E2_END_ID: usize = 6;

/// Whole-token vocabulary. Reserved entries occupy indices `0..RESERVED.len()`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    /// Builds a vocabulary from training instances. Tokens seen fewer than
    /// `min_count` times are left out and will map to `[UNK]`. Ordering is by
    /// frequency descending, then lexicographic.
    pub fn build(train: &[RelationInstance], min_count: usize) -> Self {
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for inst in train {
            for t in &inst.tokens {
                *counts.entry(t.as_str()).or_default() += 1;
            }
        }
        let mut kept: Vec<(&str, usize)> = counts
            .into_iter()
            .filter(|(t, c)| *c >= min_count && !RESERVED.contains(t))
            .collect();
        kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        let tokens = RESERVED
            .iter()
            .map(|s| s.to_string())
            .chain(kept.into_iter().map(|(t, _)| t.to_string()))
            .collect();
        Self::from_tokens_unchecked(tokens)
    }

    /// Rebuilds a vocabulary from its ordered token list (e.g. from a checkpoint).
    pub fn from_tokens(tokens: Vec<String>) -> Result<Self> {
        if tokens.len() < RESERVED.len() || tokens.iter().zip(RESERVED).any(|(a, b)| a != b) {
            return Err(Error::Config(
                "vocabulary must start with the reserved tokens".into(),
            ));
        }
        let v = Self::from_tokens_unchecked(tokens);
        if v.index.len() != v.tokens.len() {
            return Err(Error::Config("vocabulary contains duplicate tokens".into()));
        }
        Ok(v)
    }

    fn from_tokens_unchecked(tokens: Vec<String>) -> Self {
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Self { tokens, index }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Index of `token`, or `[UNK]`.
    pub fn id(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(UNK_ID)
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: usize) -> &str {
        &self.tokens[id]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn is_reserved(id: usize) -> bool {
        id < RESERVED.len()
    }
}
