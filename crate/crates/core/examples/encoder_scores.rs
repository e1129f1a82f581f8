//! Forward pass, NOTA score and the open-set decision rule on one instance,
//! plus the input-embedding gradient the attribution step uses.
//!
//! ```text
//! cargo run --example encoder_scores
//! ```

use openre::corpus::{gen_synthetic, known_relations, SplitSpec, Vocabulary};
use openre::encoder::{decide, forward, grad_embeddings, mark, EncoderConfig, EncoderParams, Objective};

fn main() -> openre::Result<()> {
    let splits = gen_synthetic(&SplitSpec::default())?;
    let vocab = Vocabulary::build(&splits.train, 1);
    let relations = known_relations(&splits.train);
    let params = EncoderParams::init(EncoderConfig::new(vocab.len(), relations.len()), 0)?;
    println!("{} parameters", params.num_scalars());

    let inst = &splits.train[0];
    let marked = mark(inst, &vocab);
    let shown: Vec<&str> = marked.ids.iter().map(|&id| vocab.token(id)).collect();
    println!("input: {}", shown.join(" "));

    let fwd = forward(&params, &marked)?;
    let probs = fwd.probs();
    for (r, name) in relations.iter().enumerate() {
        println!("  {name:<20} logit {:+.4}  p {:.4}", fwd.logits[r], probs[r]);
    }
    // an untrained model is close to uniform, so s ≈ ln(n)
    println!("s = {:.4} (ln n = {:.4})", fwd.score(), (relations.len() as f64).ln());
    for alpha in [f64::NEG_INFINITY, fwd.score() - 0.01, fwd.score()] {
        println!("  α = {alpha:+.4}: {:?}", decide(fwd.logits.view(), alpha));
    }

    let g = grad_embeddings(&params, &marked, Objective::NotaScore)?;
    println!("\n|∇_w s| per position:");
    for (pos, row) in g.rows().into_iter().enumerate() {
        println!("  {:>2} {:<12} {:.2e}", pos, shown[pos], row.dot(&row).sqrt());
    }
    Ok(())
}
