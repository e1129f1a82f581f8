//! Generates the synthetic open-set corpus and shows what it looks like.
//!
//! ```text
//! cargo run --example gen_corpus [-- <out-dir>]
//! ```
//!
//! With an output directory the three splits are written as JSONL, in the
//! same format `openre gen-data` produces.

use std::collections::BTreeMap;

use openre::corpus::{gen_synthetic, write_jsonl, RelationInstance, SplitSpec};

fn show(inst: &RelationInstance) -> String {
    inst.tokens
        .iter()
        .enumerate()
        .map(|(i, t)| {
            if inst.head.contains(i) {
                format!("<{t}>")
            } else if inst.tail.contains(i) {
                format!("[{t}]")
            } else {
                t.clone()
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = SplitSpec::default();
    let splits = gen_synthetic(&spec)?;

    for (name, set) in [("train", &splits.train), ("validation", &splits.validation), ("test", &splits.test)] {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for inst in set {
            *counts.entry(&inst.relation).or_default() += 1;
        }
        println!("{name}: {} instances", set.len());
        for (rel, n) in counts {
            println!("  {rel:<20} {n}");
        }
    }

    println!("\nsamples (<head>, [tail]):");
    for inst in splits.train.iter().take(6) {
        println!("  {:<20} {}", inst.relation, show(inst));
    }

    if let Some(dir) = std::env::args().nth(1) {
        let dir = std::path::PathBuf::from(dir);
        std::fs::create_dir_all(&dir)?;
        write_jsonl(dir.join("train.jsonl"), &splits.train)?;
        write_jsonl(dir.join("val.jsonl"), &splits.validation)?;
        write_jsonl(dir.join("test.jsonl"), &splits.test)?;
        println!("\nwrote {}", dir.display());
    }
    Ok(())
}
