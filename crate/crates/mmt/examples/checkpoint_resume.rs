//! Interrupt a training run, restore it from its checkpoint bytes, and
//! verify the resumed run lands on exactly the same weights as an
//! uninterrupted one - the checkpoint carries the optimizer moments and
//! the random-stream state.

use mmt::adversarial::{AdvConfig, Variant};
use mmt::data::{synth_generate, FeatureStore, SynthConfig};
use mmt::train::{Checkpoint, TrainConfig, TrainData, Trainer};

fn main() -> mmt::Result<()> {
    let scfg = SynthConfig {
        sentences: 30,
        regular_tokens: 8,
        ambiguous_tokens: 1,
        senses: 2,
        len_range: (3, 5),
        ambiguous_prob: 0.3,
        feat_dim: 16,
        noise: 0.1,
        seed: 31,
    };
    let corpus = synth_generate(&scfg)?;
    let feats = FeatureStore::from_rows(
        30,
        scfg.feat_dim,
        corpus.features.iter().map(|&f| f as f64).collect(),
    )?;
    let data = TrainData::from_tokenized(
        corpus.src.clone(),
        corpus.tgt.clone(),
        feats.clone(),
        corpus.src,
        corpus.tgt,
        feats,
    )?;
    let cfg = TrainConfig {
        adv: AdvConfig {
            variant: Variant::QWaae,
            ..AdvConfig::default()
        },
        batch_size: 10,
        max_epochs: 8,
        patience: 20,
        seed: 13,
        ..TrainConfig::default()
    };

    let mut straight = Trainer::new(cfg.clone(), &data)?;
    for _ in 0..8 {
        straight.run_epoch(&data)?;
    }

    let mut interrupted = Trainer::new(cfg, &data)?;
    for _ in 0..4 {
        interrupted.run_epoch(&data)?;
    }
    let bytes = interrupted.checkpoint_with_vocabs(&data).to_bytes();
    println!("checkpoint after 4 epochs: {} bytes", bytes.len());
    drop(interrupted);

    let mut resumed = Trainer::from_checkpoint(Checkpoint::from_bytes(&bytes)?, &data)?;
    for _ in 0..4 {
        resumed.run_epoch(&data)?;
    }

    assert_eq!(straight.model, resumed.model);
    assert_eq!(straight.adv, resumed.adv);
    println!("resumed weights are bit-identical to the uninterrupted run");
    Ok(())
}
