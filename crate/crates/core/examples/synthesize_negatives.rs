//! Adversarial and `[MASK]` negatives side by side.
//!
//! Both modes replace the same key tokens. The adversarial one picks the
//! allowed token whose embedding best aligns with `∇ s`, which should leave
//! the negative looking more "known" to the model (higher `s`) than a plain
//! mask. That closeness is what makes it a hard negative.
//!
//! ```text
//! cargo run --release --example synthesize_negatives
//! ```

use openre::corpus::{gen_synthetic, SplitSpec};
use openre::encoder::forward;
use openre::synthesis::{synthesize_tokens, SynthesisConfig, SynthesisMode};
use openre::training::{prepare, train, TrainConfig};

fn main() -> openre::Result<()> {
    let splits = gen_synthetic(&SplitSpec::default())?;
    // baseline training, so negatives are judged by a model that has never seen any
    let config = TrainConfig {
        use_negatives: false,
        ..TrainConfig::default()
    };
    let (model, _) = train(&config, &splits.train, &splits.validation)?;
    let prep = prepare(&splits.train, model.vocab.clone(), model.relations.clone(), None)?;

    let adversarial = SynthesisConfig::default();
    let mask = SynthesisConfig {
        mode: SynthesisMode::Mask,
        ..SynthesisConfig::default()
    };
    let (mut s_src, mut s_adv, mut s_mask) = (0.0, 0.0, 0.0);
    let n = 40;
    for i in 0..n {
        let src = prep.source(&splits.train, i);
        let a = synthesize_tokens(&model.params, src, prep.context(), &adversarial)?;
        let m = synthesize_tokens(&model.params, src, prep.context(), &mask)?;
        let s = forward(&model.params, src.marked)?.score();
        let sa = forward(&model.params, &a.negative.marked)?.score();
        let sm = forward(&model.params, &m.negative.marked)?.score();
        s_src += s;
        s_adv += sa;
        s_mask += sm;
        if i < 5 {
            println!("{}  s = {s:.2}", src.instance.relation);
            println!("  source       {}", src.instance.tokens.join(" "));
            println!("  adversarial  {}  s = {sa:.2}", a.negative.instance.tokens.join(" "));
            println!("  mask         {}  s = {sm:.2}", m.negative.instance.tokens.join(" "));
        }
    }
    let k = n as f64;
    println!("\nmean s over {n} instances: source {:.3}, adversarial {:.3}, mask {:.3}", s_src / k, s_adv / k, s_mask / k);
    Ok(())
}
