use mmt::data::{synth_generate, SynthConfig, FeatureStore};
use mmt::train::{train, TrainConfig, TrainData};
use mmt::adversarial::{AdvConfig, Variant};

fn main() {
    let variant_s: String = std::env::args().nth(1).unwrap();
    let d: usize = std::env::args().nth(2).unwrap().parse().unwrap();
    let lr: f64 = std::env::args().nth(3).unwrap().parse().unwrap();
    let ap: f64 = std::env::args().nth(4).unwrap().parse().unwrap();
    let seed: u64 = std::env::args().nth(5).unwrap().parse().unwrap();
    let epochs: usize = std::env::args().nth(6).unwrap().parse().unwrap();
    let variant = Variant::parse(&variant_s).unwrap();
    let base = SynthConfig {
        sentences: 2000, regular_tokens: 20, ambiguous_tokens: 8, senses: 2,
        len_range: (4, 8), ambiguous_prob: ap, feat_dim: d, noise: 0.1, seed: 100,
    };
    let tr = synth_generate(&base).unwrap();
    let va = synth_generate(&SynthConfig { sentences: 200, seed: 100 ^ 0x5641, ..base }).unwrap();
    let trf = FeatureStore::from_rows(2000, d, tr.features.iter().map(|&f| f as f64).collect()).unwrap();
    let vaf = FeatureStore::from_rows(200, d, va.features.iter().map(|&f| f as f64).collect()).unwrap();
    let mut data = TrainData::from_tokenized(tr.src, tr.tgt, trf, va.src, va.tgt, vaf).unwrap();
    data.valid.annotations = Some(va.annotations);
    data.lexicon = Some(va.lexicon);
    let tc = TrainConfig {
        adv: AdvConfig { variant, lambda_r: lr, ..AdvConfig::default() },
        batch_size: 32, max_epochs: epochs, patience: epochs, seed,
        ..TrainConfig::default()
    };
    let r = train(&tc, &data, None).unwrap();
    let best = r.metrics.iter().find(|m| m.epoch == r.best_epoch).unwrap();
    let last_acc: Vec<f64> = r.metrics.iter().rev().take(5).filter_map(|m| m.amb_accuracy).collect();
    println!("{variant_s} d={d} lr={lr} ap={ap} s={seed}: BEST ep{} bleu {:.2} acc {:.3} | tail accs {:?}",
        best.epoch, best.val_bleu, best.amb_accuracy.unwrap_or(-1.0),
        last_acc.iter().map(|a| (a*100.0).round()/100.0).collect::<Vec<_>>());
}
