//! Relation tf-idf and the substitution ban list built from it.
//!
//! Tokens that characterise a known relation get high tf-idf for it and are
//! banned as substitutes, so a synthesized negative can never smuggle in
//! another known relation's trigger.
//!
//! ```text
//! cargo run --example tfidf_banlist
//! ```

use openre::corpus::{default_ban_k, gen_synthetic, known_relations, BanList, SplitSpec, TfIdfTable, Vocabulary};

fn main() -> openre::Result<()> {
    let splits = gen_synthetic(&SplitSpec::default())?;
    let vocab = Vocabulary::build(&splits.train, 1);
    let relations = known_relations(&splits.train);
    let table = TfIdfTable::compute(&splits.train, &vocab, &relations)?;

    println!("vocabulary: {} tokens", vocab.len());
    for (r, name) in relations.iter().enumerate() {
        let top: Vec<String> = table
            .top_k(r, 8)
            .into_iter()
            .map(|id| format!("{} {:.3}", vocab.token(id), table.get(id, r)))
            .collect();
        println!("{name:<20} {}", top.join(", "));
    }

    let k = default_ban_k(vocab.len());
    let ban = BanList::build(&table, k);
    println!("\nban list with k = {k}: {} of {} tokens", ban.len(), vocab.len());
    let shared = ["the", "was", "in"];
    for t in shared {
        let id = vocab.id(t);
        println!("  {t:<6} idf {:.3}  banned {}", table.idf(id), ban.contains(id));
    }
    Ok(())
}
