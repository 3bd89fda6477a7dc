//! Decode with greedy search, beam search and a (trivial) ensemble, then
//! score the hypotheses with corpus BLEU.

use mmt::adversarial::{AdvConfig, Variant};
use mmt::data::{synth_generate, FeatureStore, SynthConfig};
use mmt::eval::{bleu, bleu_display};
use mmt::model::{translate, DecodeMode};
use mmt::train::{train, TrainConfig, TrainData};

fn main() -> mmt::Result<()> {
    let scfg = SynthConfig {
        sentences: 50,
        regular_tokens: 9,
        ambiguous_tokens: 0,
        senses: 2,
        len_range: (3, 6),
        ambiguous_prob: 0.0,
        feat_dim: 16,
        noise: 0.1,
        seed: 21,
    };
    let corpus = synth_generate(&scfg)?;
    let feats = FeatureStore::from_rows(
        50,
        scfg.feat_dim,
        corpus.features.iter().map(|&f| f as f64).collect(),
    )?;
    let data = TrainData::from_tokenized(
        corpus.src.clone(),
        corpus.tgt.clone(),
        feats.clone(),
        corpus.src.clone(),
        corpus.tgt.clone(),
        feats.clone(),
    )?;
    let cfg = TrainConfig {
        adv: AdvConfig {
            variant: Variant::None,
            ..AdvConfig::default()
        },
        batch_size: 10,
        max_epochs: 50,
        patience: 50,
        seed: 2,
        ..TrainConfig::default()
    };
    let result = train(&cfg, &data, None)?;
    let model = &result.model;

    let mut greedy_hyps = Vec::new();
    let mut beam_hyps = Vec::new();
    for i in 0..corpus.src.len() {
        let ids = data.src_vocab.encode(&corpus.src[i]);
        let v = feats.row(i);
        let g = translate(&[model], &ids, v, DecodeMode::Greedy, 12)?;
        let b = translate(&[model, model], &ids, v, DecodeMode::Beam(4), 12)?;
        greedy_hyps.push(data.tgt_vocab.decode(&g.tokens).join(" "));
        beam_hyps.push(data.tgt_vocab.decode(&b.tokens).join(" "));
    }
    let refs: Vec<String> = corpus.tgt.iter().map(|t| t.join(" ")).collect();
    println!(
        "greedy BLEU             = {}",
        bleu_display(bleu(&refs, &greedy_hyps, false)?)
    );
    println!(
        "beam(4) ensemble BLEU   = {}",
        bleu_display(bleu(&refs, &beam_hyps, false)?)
    );
    println!("\nsample:");
    println!("  source:     {}", corpus.src[0].join(" "));
    println!("  reference:  {}", refs[0]);
    println!("  hypothesis: {}", greedy_hyps[0]);
    Ok(())
}
