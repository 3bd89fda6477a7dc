use mmt::data::{synth_generate, SynthConfig, FeatureStore};
use mmt::train::{Trainer, TrainConfig, TrainData};
use mmt::adversarial::{AdvConfig, Variant};

fn make_data(seed_base: u64) -> TrainData {
    let base = SynthConfig {
        sentences: 2000, regular_tokens: 20, ambiguous_tokens: 8, senses: 2,
        len_range: (4, 8), ambiguous_prob: 0.3, feat_dim: 64, noise: 0.1, seed: seed_base,
    };
    let tr = synth_generate(&base).unwrap();
    let va = synth_generate(&SynthConfig { sentences: 200, seed: seed_base ^ 0x5641, ..base }).unwrap();
    let trf = FeatureStore::from_rows(2000, 64, tr.features.iter().map(|&f| f as f64).collect()).unwrap();
    let vaf = FeatureStore::from_rows(200, 64, va.features.iter().map(|&f| f as f64).collect()).unwrap();
    let mut d = TrainData::from_tokenized(tr.src, tr.tgt, trf, va.src, va.tgt, vaf).unwrap();
    d.valid.annotations = Some(va.annotations);
    d.lexicon = Some(va.lexicon);
    d
}

fn main() {
    let which: String = std::env::args().nth(1).unwrap();
    let data = make_data(100);
    let (variant, zero_v) = match which.as_str() {
        "baseline" => (Variant::None, false),
        "baseline-g" => (Variant::RegressionOnly, false),
        "baseline-g-nov" => (Variant::RegressionOnly, true),
        "q-waae" => (Variant::QWaae, false),
        "g-wgan" => (Variant::GWgan, false),
        _ => panic!(),
    };
    let tc = TrainConfig {
        adv: AdvConfig { variant, noise_dim: 128, ..AdvConfig::default() },
        batch_size: 32, max_epochs: 90, patience: 90, seed: 1, zero_visual: zero_v,
        ..TrainConfig::default()
    };
    let mut trainer = Trainer::new(tc, &data).unwrap();
    for _ in 0..90 {
        let m = trainer.run_epoch(&data).unwrap();
        println!("{which} ep{:3} lq {:7.3} bleu {:6.2} acc {:.3} ({:.1}s)",
            m.epoch, m.train_lq, m.val_bleu, m.amb_accuracy.unwrap_or(-1.0), m.seconds);
    }
}
