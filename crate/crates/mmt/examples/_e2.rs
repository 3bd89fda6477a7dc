// E2: after waae training on the criterion-scale corpus, what does the
// generator actually reconstruct? sense dims vs distractor dims vs floor.
use mmt::data::{synth_generate, SynthConfig, FeatureStore, make_batches};
use mmt::train::{train, TrainConfig, TrainData};
use mmt::adversarial::{AdvConfig, Variant, AdvParams, generate_waae};
use mmt::{Tape, Rng};

fn main() {
    let epochs: usize = std::env::args().nth(1).unwrap().parse().unwrap();
    let base = SynthConfig {
        sentences: 2000, regular_tokens: 20, ambiguous_tokens: 8, senses: 2,
        len_range: (4, 8), ambiguous_prob: 0.3, feat_dim: 64, noise: 0.1, seed: 100,
    };
    let tr = synth_generate(&base).unwrap();
    let va = synth_generate(&SynthConfig { sentences: 200, seed: 100 ^ 0x5641, ..base }).unwrap();
    let trf = FeatureStore::from_rows(2000, 64, tr.features.iter().map(|&f| f as f64).collect()).unwrap();
    let vaf = FeatureStore::from_rows(200, 64, va.features.iter().map(|&f| f as f64).collect()).unwrap();
    let mut d = TrainData::from_tokenized(tr.src, tr.tgt, trf, va.src, va.tgt, vaf.clone()).unwrap();
    d.valid.annotations = Some(va.annotations);
    d.lexicon = Some(va.lexicon);

    let tc = TrainConfig {
        adv: AdvConfig { variant: Variant::QWaae, ..AdvConfig::default() },
        batch_size: 32, max_epochs: epochs, patience: epochs, seed: 1,
        ..TrainConfig::default()
    };
    let r = train(&tc, &d, None).unwrap();
    let last = r.metrics.last().unwrap();
    println!("after {} epochs: bleu {:.2} acc {:?}", epochs, last.val_bleu, last.amb_accuracy);

    // reconstruction quality on validation, teacher-forced h_T, no dropout
    let model = &r.model;
    let gen = match &r.adv { AdvParams::Waae(p) => p.clone(), _ => panic!() };
    let batches = make_batches(&d.valid.pairs, &d.valid.features, 32, 0).unwrap();
    let nd = 64usize;
    let mut se = vec![0.0; nd];       // squared err of generator
    let mut count = 0usize;
    let mut sum = vec![0.0; nd];      // for store stats
    let mut sumsq = vec![0.0; nd];
    for b in &batches {
        let tape = Tape::inference();
        let taped = model.leaf_onto(&tape, false).unwrap();
        let feats = tape.constant(b.features.clone()).unwrap();
        let mut rng = Rng::seed_from(0);
        let fp = mmt::model::forward_batch(&tape, &taped, b, feats, false, &mut rng).unwrap();
        let tg = gen.leaf_onto(&tape, false, false).unwrap();
        let vfake = generate_waae(&tape, &tg, fp.h_final).unwrap();
        let vf = tape.tensor(vfake);
        for i in 0..b.size {
            for j in 0..nd {
                let t = b.features.row(i)[j];
                let p = vf.row(i)[j];
                se[j] += (t - p) * (t - p);
                sum[j] += t; sumsq[j] += t * t;
            }
            count += 1;
        }
    }
    let mse = |range: std::ops::Range<usize>, se: &[f64]| -> f64 {
        range.clone().map(|j| se[j]).sum::<f64>() / (range.len() * count) as f64
    };
    let floor = |range: std::ops::Range<usize>| -> f64 {
        range.clone().map(|j| sumsq[j]/count as f64 - (sum[j]/count as f64).powi(2)).sum::<f64>() / range.len() as f64
    };
    println!("sense dims   (0..16): gen MSE {:.5}  mean-pred floor {:.5}", mse(0..16, &se), floor(0..16));
    println!("distractors (16..64): gen MSE {:.5}  mean-pred floor {:.5}", mse(16..64, &se), floor(16..64));
}
