use mmt::data::{synth_generate, SynthConfig, FeatureStore};
use mmt::train::{train, TrainConfig, TrainData};
use mmt::adversarial::{AdvConfig, Variant};

fn main() {
    let variant_s: String = std::env::args().nth(1).unwrap();
    let lr: f64 = std::env::args().nth(2).unwrap().parse().unwrap();
    let seed: u64 = std::env::args().nth(3).unwrap().parse().unwrap();
    let epochs: usize = std::env::args().nth(4).unwrap().parse().unwrap();
    let variant = Variant::parse(&variant_s).unwrap();
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
        adv: AdvConfig { variant, lambda_r: lr, ..AdvConfig::default() },
        batch_size: 32, max_epochs: epochs, patience: epochs, seed,
        ..TrainConfig::default()
    };
    let r = train(&tc, &d, None).unwrap();
    for m in r.metrics.iter().filter(|m| m.epoch % 5 == 0) {
        println!("{variant_s} lr={lr} s={seed} ep{:3} lq {:7.3} bleu {:6.2} acc {:.3}",
            m.epoch, m.train_lq, m.val_bleu, m.amb_accuracy.unwrap_or(-1.0));
    }
    let best = r.metrics.iter().find(|m| m.epoch == r.best_epoch).unwrap();
    println!("BEST {variant_s} lr={lr} s={seed}: ep{} bleu {:.2} acc {:.3}",
        best.epoch, best.val_bleu, best.amb_accuracy.unwrap_or(-1.0));
}
