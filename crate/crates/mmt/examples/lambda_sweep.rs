//! Sweep the adversarial and reconstruction coefficients of the
//! latent-critic variant over a small grid: when the auxiliary loss is
//! weighted too heavily, translation quality suffers.

use mmt::adversarial::{AdvConfig, Variant};
use mmt::data::{synth_generate, FeatureStore, SynthConfig};
use mmt::train::{run_lambda_sweep, TrainConfig, TrainData};

fn main() -> mmt::Result<()> {
    let base = SynthConfig {
        sentences: 300,
        regular_tokens: 12,
        ambiguous_tokens: 2,
        senses: 2,
        len_range: (4, 7),
        ambiguous_prob: 0.3,
        feat_dim: 32,
        noise: 0.1,
        seed: 60,
    };
    let train_out = synth_generate(&base)?;
    let valid_out = synth_generate(&SynthConfig {
        sentences: 60,
        seed: 61,
        ..base
    })?;
    let train_feats = FeatureStore::from_rows(
        300,
        base.feat_dim,
        train_out.features.iter().map(|&f| f as f64).collect(),
    )?;
    let valid_feats = FeatureStore::from_rows(
        60,
        base.feat_dim,
        valid_out.features.iter().map(|&f| f as f64).collect(),
    )?;
    let data = TrainData::from_tokenized(
        train_out.src,
        train_out.tgt,
        train_feats,
        valid_out.src,
        valid_out.tgt,
        valid_feats,
    )?;

    let cfg = TrainConfig {
        adv: AdvConfig {
            variant: Variant::QWaae,
            ..AdvConfig::default()
        },
        batch_size: 16,
        max_epochs: 20,
        patience: 10,
        ..TrainConfig::default()
    };
    eprintln!("sweeping a 2x2 corner grid with one seed; grab a coffee...");
    let report = run_lambda_sweep(&cfg, &data, &[0.2, 0.8], &[0.2, 0.8], &[1])?;
    print!("{}", report.to_tsv());
    Ok(())
}
