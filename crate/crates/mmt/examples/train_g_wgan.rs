//! Train the feature-space critic variant: five critic updates per
//! generator update, each with fresh noise and a fresh interpolation point
//! for the gradient penalty.

use mmt::adversarial::{AdvConfig, Variant};
use mmt::data::{synth_generate, FeatureStore, SynthConfig};
use mmt::train::{train, TrainConfig, TrainData};

fn main() -> mmt::Result<()> {
    let base = SynthConfig {
        sentences: 200,
        regular_tokens: 12,
        ambiguous_tokens: 2,
        senses: 2,
        len_range: (4, 7),
        ambiguous_prob: 0.3,
        feat_dim: 32,
        noise: 0.1,
        seed: 4,
    };
    let train_out = synth_generate(&base)?;
    let valid_out = synth_generate(&SynthConfig {
        sentences: 40,
        seed: 77,
        ..base
    })?;
    let train_feats = FeatureStore::from_rows(
        200,
        base.feat_dim,
        train_out.features.iter().map(|&f| f as f64).collect(),
    )?;
    let valid_feats = FeatureStore::from_rows(
        40,
        base.feat_dim,
        valid_out.features.iter().map(|&f| f as f64).collect(),
    )?;
    let mut data = TrainData::from_tokenized(
        train_out.src,
        train_out.tgt,
        train_feats,
        valid_out.src,
        valid_out.tgt,
        valid_feats,
    )?;
    data.valid.annotations = Some(valid_out.annotations);
    data.lexicon = Some(valid_out.lexicon);

    let cfg = TrainConfig {
        adv: AdvConfig {
            variant: Variant::GWgan,
            lambda_a: 0.2,
            lambda_critic: 5,
            noise_dim: 32,
            ..AdvConfig::default()
        },
        batch_size: 16,
        max_epochs: 12,
        patience: 12,
        seed: 3,
        ..TrainConfig::default()
    };
    let result = train(&cfg, &data, None)?;
    for m in result.metrics.iter() {
        println!(
            "epoch {:3}  L_Q {:7.3}  adversarial {:8.4}  BLEU {:6.2}",
            m.epoch, m.train_lq, m.train_aux, m.val_bleu
        );
    }
    println!(
        "\ncritic updates = {}, generator updates = {} (ratio {})",
        result.stats.critic_updates,
        result.stats.generator_updates,
        result.stats.critic_updates / result.stats.generator_updates
    );
    println!(
        "largest post-clip gradient norm on model updates: {:.6}",
        result.stats.max_postclip_norm
    );
    Ok(())
}
