//! Train the plain attention model on a tiny synthetic corpus and watch it
//! memorize: the per-epoch log shows the translation loss falling and the
//! validation BLEU rising to 100.

use mmt::adversarial::{AdvConfig, Variant};
use mmt::data::{synth_generate, FeatureStore, SynthConfig};
use mmt::train::{train, TrainConfig, TrainData};

fn main() -> mmt::Result<()> {
    let scfg = SynthConfig {
        sentences: 40,
        regular_tokens: 10,
        ambiguous_tokens: 0,
        senses: 2,
        len_range: (3, 6),
        ambiguous_prob: 0.0,
        feat_dim: 16,
        noise: 0.1,
        seed: 1,
    };
    let corpus = synth_generate(&scfg)?;
    let feats = FeatureStore::from_rows(
        scfg.sentences,
        scfg.feat_dim,
        corpus.features.iter().map(|&f| f as f64).collect(),
    )?;
    // validate on the training sentences: this example is about memorization
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
            variant: Variant::None,
            ..AdvConfig::default()
        },
        batch_size: 8,
        max_epochs: 60,
        patience: 60,
        seed: 5,
        ..TrainConfig::default()
    };
    let result = train(&cfg, &data, None)?;
    for m in result.metrics.iter().step_by(5) {
        println!(
            "epoch {:3}  loss/sentence {:7.3}  BLEU {:6.2}",
            m.epoch, m.train_lq, m.val_bleu
        );
    }
    println!(
        "\nbest BLEU {:.2} at epoch {}",
        result.best_val_bleu, result.best_epoch
    );
    Ok(())
}
