use mmt::data::{synth_generate, SynthConfig, FeatureStore};
use mmt::train::{run_ablation, TrainConfig, TrainData};
use mmt::adversarial::AdvConfig;
use std::time::Instant;

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
    let data = make_data(100);
    let base = TrainConfig {
        adv: AdvConfig::default(),
        batch_size: 32, max_epochs: 40, patience: 5, seed: 0,
        ..TrainConfig::default()
    };
    let t0 = Instant::now();
    let report = run_ablation(&base, &data, &[1]).unwrap();
    println!("{}", report.to_tsv());
    println!("total: {:.0}s", t0.elapsed().as_secs_f64());
}
