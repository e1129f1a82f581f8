//! Which tokens carry the relation? Trains a model briefly, then prints the
//! importance breakdown `I = a · t · dp` for a few training instances and
//! the key tokens that synthesis would replace.
//!
//! ```text
//! cargo run --release --example attribution_explain
//! ```

use openre::attribution::{candidates, score_tokens, select_key_tokens, ImportanceSwitches};
use openre::corpus::{gen_synthetic, SplitSpec};
use openre::training::{prepare, train, TrainConfig};

fn main() -> openre::Result<()> {
    let splits = gen_synthetic(&SplitSpec::default())?;
    let config = TrainConfig {
        epochs: 8,
        ..TrainConfig::default()
    };
    let (model, _) = train(&config, &splits.train, &splits.validation)?;
    let prep = prepare(&splits.train, model.vocab.clone(), model.relations.clone(), None)?;

    for i in 0..3 {
        let inst = &splits.train[i];
        let marked = &prep.marked[i];
        let (rows, _) = score_tokens(&model.params, inst, marked, prep.labels[i], &prep.tfidf, ImportanceSwitches::default())?;
        let importance: Vec<f64> = rows.iter().map(|r| r.importance).collect();
        let keys = select_key_tokens(&importance, config.synthesis.epsilon, &candidates(inst, marked))?;

        println!("{} ({} candidates, {} key)", inst.relation, candidates(inst, marked).len(), keys.len());
        println!("  {:>3} {:<12} {:>7} {:>7} {:>5} {:>8}", "pos", "token", "a", "t", "dp", "I");
        for r in &rows {
            let mark = if keys.contains(&r.position) {
                "  <- key"
            } else if !r.candidate {
                "  (fixed)"
            } else {
                ""
            };
            println!(
                "  {:>3} {:<12} {:>7.4} {:>7.4} {:>5.2} {:>8.5}{mark}",
                r.position,
                model.vocab.token(r.token),
                r.attribution,
                r.tfidf,
                r.dp,
                r.importance
            );
        }
        println!();
    }
    Ok(())
}
