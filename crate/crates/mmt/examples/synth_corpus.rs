//! Generate a small grounded-translation corpus and show what makes it
//! interesting: ambiguous source tokens whose correct translation is
//! decided by the feature vector, never by the text around them.

use mmt::data::{synth_generate, SynthConfig};

fn main() -> mmt::Result<()> {
    let cfg = SynthConfig {
        sentences: 8,
        regular_tokens: 10,
        ambiguous_tokens: 2,
        senses: 2,
        len_range: (4, 7),
        ambiguous_prob: 0.35,
        feat_dim: 16,
        noise: 0.05,
        seed: 11,
    };
    let out = synth_generate(&cfg)?;

    println!("sense lexicon:");
    for (src, senses) in &out.lexicon {
        println!("  {src} -> {}", senses.join(" | "));
    }
    println!();
    for i in 0..out.src.len() {
        println!("src: {}", out.src[i].join(" "));
        println!("tgt: {}", out.tgt[i].join(" "));
        let row = &out.features[i * cfg.feat_dim..i * cfg.feat_dim + 4];
        println!(
            "feature sense block: [{:.2} {:.2} | {:.2} {:.2}]  annotated positions: {:?}",
            row[0], row[1], row[2], row[3], out.annotations[i]
        );
        println!();
    }
    Ok(())
}
