// E3: lambda_r at the paper-equivalent product for desk feature width
use mmt::data::{synth_generate, SynthConfig, FeatureStore};
use mmt::train::{train, TrainConfig, TrainData};
use mmt::adversarial::{AdvConfig, Variant};

fn main() {
    let lr: f64 = std::env::args().nth(1).unwrap().parse().unwrap();
    let la: f64 = std::env::args().nth(2).unwrap().parse().unwrap();
    let epochs: usize = std::env::args().nth(3).unwrap().parse().unwrap();
    let base = SynthConfig {
        sentences: 2000, regular_tokens: 20, ambiguous_tokens: 8, senses: 2,
        len_range: (4, 8), ambiguous_prob: 0.3, feat_dim: 64, noise: 0.1, seed: 100,
    };
    let tr = synth_generate(&base).unwrap();
    let va = synth_generate(&SynthConfig { sentences: 200, seed: 100 ^ 0x5641, ..base }).unwrap();
    let trf = FeatureStore::from_rows(2000, 64, tr.features.iter().map(|&f| f as f64).collect()).unwrap();
    let vaf = FeatureStore::from_rows(200, 64, va.features.iter().map(|&f| f as f64).collect()).unwrap();
    let mut d = TrainData::from_tokenized(tr.src, tr.tgt, trf, va.src, va.tgt, vaf).unwrap();
    d.valid.annotations = Some(va.annotations);
    d.lexicon = Some(va.lexicon);
    let tc = TrainConfig {
        adv: AdvConfig { variant: Variant::QWaae, lambda_r: lr, lambda_a: la, ..AdvConfig::default() },
        batch_size: 32, max_epochs: epochs, patience: epochs, seed: 1,
        ..TrainConfig::default()
    };
    let r = train(&tc, &d, None).unwrap();
    for m in r.metrics.iter().filter(|m| m.epoch % 5 == 0) {
        println!("lr={lr} la={la} ep{:3} lq {:7.3} aux {:8.3} bleu {:6.2} acc {:.3}",
            m.epoch, m.train_lq, m.train_aux, m.val_bleu, m.amb_accuracy.unwrap_or(-1.0));
    }
}
