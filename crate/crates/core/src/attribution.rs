//! Token importance for relational semantics.
//!
//! The importance of the token at position `i` of an instance labelled `y` is
//!
//! ```text
//! I(w_i, x, y) = a(w_i, x) · t(w_i, y) · dp(w_i, x)
//! ```
//!
//! where `a` is the normalized first-order attribution
//! `|∇_{w_i} s · w_i| / Σ_j |∇_{w_j} s · w_j|`, `t` is the relation tf-idf
//! and `dp` boosts tokens on the dependency path between the entities by
//! `|x| / |T|`. The first-order term approximates the counterfactual drop
//! `s(x) − s(x without w_i)`; the two coincide when `s` is linear in the
//! embeddings.

use std::collections::BTreeSet;

use ndarray::Array2;

use crate::corpus::{RelationInstance, TfIdfTable};
use crate::encoder::{forward, nota_score, EncoderParams, MarkedInstance, Objective};
use crate::error::{Error, Result};

/// Which factors of the importance score are active. A disabled factor is
/// replaced by all ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ImportanceSwitches {
    pub use_attribution: bool,
    pub use_tfidf: bool,
    pub use_dp: bool,
}

impl Default for ImportanceSwitches {
    fn default() -> Self {
        Self {
            use_attribution: true,
            use_tfidf: true,
            use_dp: true,
        }
    }
}

/// Per-position breakdown of the importance score.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenImportance {
    pub position: usize,
    pub token: usize,
    pub attribution: f64,
    pub tfidf: f64,
    pub dp: f64,
    pub importance: f64,
    pub candidate: bool,
}

/// `s(x) − s(x_{-i})`, re-encoding the shortened sequence.
pub fn counterfactual_contribution(
    params: &EncoderParams,
    inst: &MarkedInstance,
    pos: usize,
) -> Result<f64> {
    if pos >= inst.len() {
        return Err(Error::Invalid(format!("position {pos} out of range")));
    }
    if inst.is_marker(pos) {
        return Err(Error::Invalid(format!("position {pos} is an entity marker")));
    }
    if inst.len() == 1 {
        return Err(Error::Invalid("removing the only token empties the sequence".into()));
    }
    let reduced = inst.without(pos).expect("checked above");
    let full = nota_score(forward(params, inst)?.logits.view());
    let without = nota_score(forward(params, &reduced)?.logits.view());
    Ok(full - without)
}

/// Unnormalized first-order terms `∇_{w_i} s · w_i` at every position, and
/// the gradients they were computed from.
pub fn first_order_terms(
    params: &EncoderParams,
    inst: &MarkedInstance,
) -> Result<(Vec<f64>, Array2<f64>)> {
    let grads = crate::encoder::grad_embeddings(params, inst, Objective::NotaScore)?;
    let terms = inst
        .ids
        .iter()
        .zip(grads.rows())
        .map(|(&id, g)| g.dot(&params.embeddings.row(id)))
        .collect();
    Ok((terms, grads))
}

/// Normalizes `|raw_i|` to sum to one; uniform when every term is zero.
pub fn attribution_scores(raw: &[f64]) -> Vec<f64> {
    let total: f64 = raw.iter().map(|x| x.abs()).sum();
    if total == 0.0 || !total.is_finite() {
        let n = raw.len().max(1) as f64;
        return vec![1.0 / n; raw.len()];
    }
    raw.iter().map(|x| x.abs() / total).collect()
}

/// Dependency score per source token: `|x| / |T|` on the path, 1 elsewhere.
pub fn dp_scores(inst: &RelationInstance) -> Vec<f64> {
    let n = inst.len();
    let path: BTreeSet<usize> = inst
        .dep_path
        .iter()
        .flatten()
        .copied()
        .filter(|&i| i < n)
        .collect();
    if path.is_empty() {
        return vec![1.0; n];
    }
    let boost = n as f64 / path.len() as f64;
    (0..n)
        .map(|i| if path.contains(&i) { boost } else { 1.0 })
        .collect()
}

/// Elementwise `a · t · dp`, with disabled factors treated as ones.
pub fn importance(
    a: &[f64],
    t: &[f64],
    dp: &[f64],
    switches: ImportanceSwitches,
) -> Result<Vec<f64>> {
    if a.len() != t.len() || a.len() != dp.len() {
        return Err(Error::Shape(format!(
            "importance factors have lengths {}, {}, {}",
            a.len(),
            t.len(),
            dp.len()
        )));
    }
    let pick = |on: bool, v: f64| if on { v } else { 1.0 };
    Ok(a.iter()
        .zip(t)
        .zip(dp)
        .map(|((&a, &t), &dp)| {
            pick(switches.use_attribution, a) * pick(switches.use_tfidf, t) * pick(switches.use_dp, dp)
        })
        .collect())
}

/// Positions eligible for substitution: not a marker and not inside either
/// entity mention.
pub fn candidates(inst: &RelationInstance, marked: &MarkedInstance) -> Vec<usize> {
    marked
        .source
        .iter()
        .enumerate()
        .filter_map(|(pos, src)| match src {
            Some(i) if !inst.in_entity(*i) => Some(pos),
            _ => None,
        })
        .collect()
}

/// The top `max(1, round(ε·|C|))` candidates by importance, highest first;
/// ties go to the lower position.
pub fn select_key_tokens(importance: &[f64], epsilon: f64, candidates: &[usize]) -> Result<Vec<usize>> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::Config(format!("epsilon {epsilon} not in (0, 1]")));
    }
    if candidates.is_empty() {
        return Err(Error::Invalid("no candidate tokens to substitute".into()));
    }
    if let Some(&bad) = candidates.iter().find(|&&p| p >= importance.len()) {
        return Err(Error::Shape(format!("candidate position {bad} out of range")));
    }
    let count = ((epsilon * candidates.len() as f64).round() as usize).clamp(1, candidates.len());
    let mut ranked = candidates.to_vec();
    ranked.sort_by(|&a, &b| importance[b].total_cmp(&importance[a]).then(a.cmp(&b)));
    ranked.truncate(count);
    Ok(ranked)
}

/// Full importance breakdown for one training instance with relation index
/// `relation`, plus the `∇ s` gradients used (reused for misleading-token
/// search).
pub fn score_tokens(
    params: &EncoderParams,
    inst: &RelationInstance,
    marked: &MarkedInstance,
    relation: usize,
    tfidf: &TfIdfTable,
    switches: ImportanceSwitches,
) -> Result<(Vec<TokenImportance>, Array2<f64>)> {
    let (raw, grads) = first_order_terms(params, marked)?;
    let a = attribution_scores(&raw);
    let t: Vec<f64> = marked.ids.iter().map(|&id| tfidf.get(id, relation)).collect();
    let dp_src = dp_scores(inst);
    let dp: Vec<f64> = marked
        .source
        .iter()
        .map(|s| s.map_or(1.0, |i| dp_src[i]))
        .collect();
    let imp = importance(&a, &t, &dp, switches)?;
    let cand: BTreeSet<usize> = candidates(inst, marked).into_iter().collect();
    let rows = (0..marked.len())
        .map(|pos| TokenImportance {
            position: pos,
            token: marked.ids[pos],
            attribution: a[pos],
            tfidf: t[pos],
            dp: dp[pos],
            importance: imp[pos],
            candidate: cand.contains(&pos),
        })
        .collect();
    Ok((rows, grads))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Span, Vocabulary};
    use crate::encoder::{mark, EncoderConfig, Readout};
    use proptest::prelude::*;

    fn inst(words: &str, head: Span, tail: Span) -> RelationInstance {
        RelationInstance::new(words.split(' ').map(String::from).collect(), head, tail, "r")
    }

    fn linear_params(vocab: usize, seed: u64) -> EncoderParams {
        let cfg = EncoderConfig {
            d_model: 4,
            depth: 0,
            readout: Readout::Sum,
            use_positions: false,
            ..EncoderConfig::new(vocab, 1)
        };
        EncoderParams::init(cfg, seed).unwrap()
    }

    #[test]
    fn attribution_examples() {
        assert_eq!(attribution_scores(&[0.3]), vec![1.0]);
        assert_eq!(attribution_scores(&[3.0, -1.0]), vec![0.75, 0.25]);
        assert_eq!(attribution_scores(&[0.0, 0.0, 0.0, 0.0]), vec![0.25; 4]);
    }

    #[test]
    fn dp_examples() {
        let mut x = inst("a b c d e f g h i j", Span(0, 1), Span(9, 10));
        assert_eq!(dp_scores(&x), vec![1.0; 10]);
        x.dep_path = Some(vec![]);
        assert_eq!(dp_scores(&x), vec![1.0; 10]);
        x.dep_path = Some(vec![0, 2, 4, 6, 9]);
        let dp = dp_scores(&x);
        for i in [0, 2, 4, 6, 9] {
            assert_eq!(dp[i], 2.0);
        }
        assert_eq!(dp[1], 1.0);
    }

    #[test]
    fn importance_examples() {
        let on = ImportanceSwitches::default();
        assert_eq!(importance(&[0.5], &[2.0], &[2.0], on).unwrap(), vec![2.0]);
        assert_eq!(importance(&[0.5, 0.0], &[2.0, 3.0], &[2.0, 1.0], on).unwrap()[1], 0.0);
        let no_tfidf = ImportanceSwitches { use_tfidf: false, ..on };
        assert_eq!(importance(&[0.5], &[2.0], &[3.0], no_tfidf).unwrap(), vec![1.5]);
        let no_attr = ImportanceSwitches { use_attribution: false, ..on };
        assert_eq!(importance(&[0.5], &[2.0], &[3.0], no_attr).unwrap(), vec![6.0]);
        let no_dp = ImportanceSwitches { use_dp: false, ..on };
        assert_eq!(importance(&[0.5], &[2.0], &[3.0], no_dp).unwrap(), vec![1.0]);
        assert!(importance(&[0.5], &[2.0, 1.0], &[3.0], on).is_err());
    }

    #[test]
    fn select_examples() {
        let imp = [0.1, 0.9, 0.3, 0.8, 0.2, 0.0, 0.5, 0.4, 0.6, 0.7];
        let cands: Vec<usize> = (0..10).collect();
        assert_eq!(select_key_tokens(&imp, 0.2, &cands).unwrap(), vec![1, 3]);
        assert_eq!(select_key_tokens(&imp, 0.01, &[0, 2, 4]).unwrap(), vec![2]);
        let mut all = select_key_tokens(&imp, 1.0, &[0, 2, 4]).unwrap();
        all.sort();
        assert_eq!(all, vec![0, 2, 4]);
        // ties to lower position
        assert_eq!(select_key_tokens(&[1.0, 1.0, 1.0], 0.34, &[2, 0, 1]).unwrap(), vec![0]);
        assert!(select_key_tokens(&imp, 0.2, &[]).is_err());
        assert!(select_key_tokens(&imp, 0.0, &cands).is_err());
        assert!(select_key_tokens(&imp, 1.5, &cands).is_err());
    }

    #[test]
    fn candidates_skip_markers_and_entities() {
        let x = inst("a b c d e", Span(1, 2), Span(3, 5));
        let vocab = Vocabulary::build(std::slice::from_ref(&x), 1);
        let m = mark(&x, &vocab);
        // a [E1] b [/E1] c [E2] d e [/E2]
        assert_eq!(candidates(&x, &m), vec![0, 4]);
    }

    #[test]
    fn linear_counterfactual_matches_head_row_dot_embedding() {
        let x = inst("a b c d e", Span(0, 1), Span(4, 5));
        let vocab = Vocabulary::build(std::slice::from_ref(&x), 1);
        let p = linear_params(vocab.len(), 9);
        let m = mark(&x, &vocab);
        let w = p.w_cls.row(0);
        for pos in candidates(&x, &m) {
            let e = p.embeddings.row(m.ids[pos]);
            let expected = w.slice(ndarray::s![..4]).dot(&e) + w.slice(ndarray::s![4..]).dot(&e);
            let c = counterfactual_contribution(&p, &m, pos).unwrap();
            assert!((c - expected).abs() < 1e-12);
        }
        assert!(counterfactual_contribution(&p, &m, m.e1).is_err());
    }

    #[test]
    fn duplicate_tokens_contribute_equally_and_zero_embedding_contributes_nothing() {
        let x = inst("a q b q c", Span(0, 1), Span(4, 5));
        let vocab = Vocabulary::build(std::slice::from_ref(&x), 1);
        let mut p = linear_params(vocab.len(), 2);
        let m = mark(&x, &vocab);
        let (p1, p3) = (m.position_of(1).unwrap(), m.position_of(3).unwrap());
        let c1 = counterfactual_contribution(&p, &m, p1).unwrap();
        let c3 = counterfactual_contribution(&p, &m, p3).unwrap();
        assert!((c1 - c3).abs() < 1e-14);
        p.embeddings.row_mut(vocab.id("b")).fill(0.0);
        let pb = m.position_of(2).unwrap();
        assert!(counterfactual_contribution(&p, &m, pb).unwrap().abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn attribution_sums_to_one_and_is_scale_invariant(
            raw in prop::collection::vec(-5.0f64..5.0, 1..12),
            lambda in 0.01f64..100.0,
        ) {
            let a = attribution_scores(&raw);
            prop_assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(a.iter().all(|&v| (0.0..=1.0).contains(&v)));
            let scaled: Vec<f64> = raw.iter().map(|x| x * lambda).collect();
            for (x, y) in a.iter().zip(attribution_scores(&scaled)) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }

        #[test]
        fn selection_avoids_non_candidates(
            imp in prop::collection::vec(0.0f64..1.0, 6..20),
            eps in 0.01f64..=1.0,
            mask in prop::collection::vec(any::<bool>(), 20),
        ) {
            let cands: Vec<usize> = (0..imp.len()).filter(|&i| mask[i]).collect();
            prop_assume!(!cands.is_empty());
            let sel = select_key_tokens(&imp, eps, &cands).unwrap();
            prop_assert!(!sel.is_empty());
            prop_assert!(sel.iter().all(|p| cands.contains(p)));
            let mut uniq = sel.clone();
            uniq.sort();
            uniq.dedup();
            prop_assert_eq!(uniq.len(), sel.len());
        }

        #[test]
        fn dp_is_at_least_one_and_constant_on_path(
            n in 2usize..15,
            path in prop::collection::vec(0usize..15, 0..6),
        ) {
            let words: Vec<String> = (0..n).map(|i| format!("t{i}")).collect();
            let mut x = RelationInstance::new(words, Span(0, 1), Span(1, 2), "r");
            let path: Vec<usize> = path.into_iter().filter(|&i| i < n).collect();
            x.dep_path = Some(path.clone());
            let dp = dp_scores(&x);
            prop_assert!(dp.iter().all(|&v| v >= 1.0));
            if let Some(&first) = path.first() {
                prop_assert!(path.iter().all(|&i| dp[i] == dp[first]));
            }
        }
    }
}
