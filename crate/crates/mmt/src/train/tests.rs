use super::*;
use crate::autodiff::Tape;
use crate::rng::Rng;
use crate::adversarial::Variant;
use crate::data::{synth_generate, SynthConfig};

/// Tiny deterministic grounded corpus for trainer tests.
fn tiny_data(sentences: usize, valid: usize, ambiguous: usize, seed: u64) -> TrainData {
    let cfg = SynthConfig {
        sentences,
        regular_tokens: 6,
        ambiguous_tokens: ambiguous,
        senses: 2,
        len_range: (3, 5),
        ambiguous_prob: if ambiguous > 0 { 0.4 } else { 0.0 },
        feat_dim: 16,
        noise: 0.05,
        seed,
    };
    let train = synth_generate(&cfg).unwrap();
    let vcfg = SynthConfig {
        sentences: valid,
        seed: seed ^ 0x5641,
        ..cfg
    };
    let valids = synth_generate(&vcfg).unwrap();
    let train_feats =
        crate::data::FeatureStore::from_rows(sentences, 16, train.features.iter().map(|&f| f as f64).collect())
            .unwrap();
    let valid_feats =
        crate::data::FeatureStore::from_rows(valid, 16, valids.features.iter().map(|&f| f as f64).collect())
            .unwrap();
    let mut data = TrainData::from_tokenized(
        train.src, train.tgt, train_feats, valids.src, valids.tgt, valid_feats,
    )
    .unwrap();
    data.valid.annotations = Some(valids.annotations);
    data.lexicon = if ambiguous > 0 { Some(valids.lexicon) } else { None };
    data
}

fn quick_cfg(variant: Variant, max_epochs: usize, seed: u64) -> TrainConfig {
    TrainConfig {
        adv: AdvConfig {
            variant,
            noise_dim: 8,
            ..AdvConfig::default()
        },
        batch_size: 8,
        max_epochs,
        patience: 50,
        seed,
        ..TrainConfig::default()
    }
}

#[test]
fn baseline_step_touches_only_model_parameters() {
    let data = tiny_data(12, 4, 0, 1);
    let mut trainer = Trainer::new(quick_cfg(Variant::None, 1, 1), &data).unwrap();
    let before_model = trainer.model.clone();
    let batches = make_batches(&data.train.pairs, &data.train.features, 8, 0).unwrap();
    trainer.train_batch(&batches[0]).unwrap();
    assert_ne!(before_model, trainer.model);
    assert_eq!(trainer.adv, AdvParams::None);
    assert_eq!(trainer.adam_g.step, 0);
    assert_eq!(trainer.adam_d.step, 0);
    assert_eq!(trainer.stats.critic_updates, 0);
    assert_eq!(trainer.stats.translation_updates, 1);
}

#[test]
fn waae_step_runs_critic_generator_translation_in_order() {
    let data = tiny_data(12, 4, 1, 2);
    let mut trainer = Trainer::new(quick_cfg(Variant::QWaae, 1, 2), &data).unwrap();
    let batches = make_batches(&data.train.pairs, &data.train.features, 8, 0).unwrap();
    trainer.train_batch(&batches[0]).unwrap();
    assert_eq!(trainer.stats.critic_updates, 1);
    assert_eq!(trainer.stats.generator_updates, 1);
    assert_eq!(trainer.stats.translation_updates, 1);
    assert_eq!(trainer.adam_d.step, 1);
    assert_eq!(trainer.adam_g.step, 1);
    assert_eq!(trainer.adam_q.step, 2); // adversarial + translation
}

#[test]
fn wgan_honors_the_critic_inner_loop_ratio() {
    let data = tiny_data(16, 4, 1, 3);
    let mut cfg = quick_cfg(Variant::GWgan, 2, 3);
    cfg.adv.lambda_critic = 5;
    let result = train(&cfg, &data, None).unwrap();
    assert!(result.stats.generator_updates > 0);
    assert_eq!(
        result.stats.critic_updates,
        5 * result.stats.generator_updates
    );
}

#[test]
fn regression_only_never_touches_the_critic() {
    let data = tiny_data(12, 4, 1, 4);
    let mut trainer = Trainer::new(quick_cfg(Variant::RegressionOnly, 1, 4), &data).unwrap();
    let before_critic = match &trainer.adv {
        AdvParams::Waae(p) => (p.w_adv.clone(), p.b_adv.clone()),
        _ => panic!("regression-only should carry latent-variant storage"),
    };
    let batches = make_batches(&data.train.pairs, &data.train.features, 8, 0).unwrap();
    trainer.train_batch(&batches[0]).unwrap();
    match &trainer.adv {
        AdvParams::Waae(p) => {
            assert_eq!(p.w_adv, before_critic.0);
            assert_eq!(p.b_adv, before_critic.1);
            // the generator did move
        }
        _ => unreachable!(),
    }
    assert_eq!(trainer.stats.critic_updates, 0);
    assert_eq!(trainer.stats.generator_updates, 1);
}

#[test]
fn fifty_steps_on_one_batch_descend_the_translation_loss() {
    let data = tiny_data(6, 2, 0, 5);
    let mut cfg = quick_cfg(Variant::None, 1, 5);
    cfg.lr_model = 1e-3;
    cfg.batch_size = 6;
    let mut trainer = Trainer::new(cfg, &data).unwrap();
    let batches = make_batches(&data.train.pairs, &data.train.features, 6, 0).unwrap();
    assert_eq!(batches.len(), 1);

    // score the true (dropout-free) objective after every update
    let eval_loss = |model: &crate::model::ModelQParams| -> f64 {
        let tape = Tape::inference();
        let taped = model.leaf_onto(&tape, false).unwrap();
        let feats = tape.constant(batches[0].features.clone()).unwrap();
        let mut rng = Rng::seed_from(0);
        let fp =
            crate::model::forward_batch(&tape, &taped, &batches[0], feats, false, &mut rng)
                .unwrap();
        tape.scalar_of(fp.loss)
    };

    let mut losses = vec![eval_loss(&trainer.model)];
    for _ in 0..50 {
        trainer.train_batch(&batches[0]).unwrap();
        losses.push(eval_loss(&trainer.model));
    }
    let decreases = losses.windows(2).filter(|w| w[1] < w[0]).count();
    assert!(
        decreases * 10 >= (losses.len() - 1) * 9,
        "only {decreases}/{} steps decreased",
        losses.len() - 1
    );
}

#[test]
fn post_clip_gradient_norm_never_exceeds_the_threshold() {
    let data = tiny_data(16, 4, 1, 6);
    for variant in [Variant::None, Variant::QWaae, Variant::GWgan] {
        let cfg = quick_cfg(variant, 2, 6);
        let result = train(&cfg, &data, None).unwrap();
        assert!(
            result.stats.max_postclip_norm <= cfg.clip_norm + 1e-9,
            "{variant:?}: {n}",
            n = result.stats.max_postclip_norm
        );
    }
}

#[test]
fn identical_seeds_reproduce_the_metrics_log() {
    let data = tiny_data(14, 4, 1, 7);
    let cfg = quick_cfg(Variant::QWaae, 3, 7);
    let a = train(&cfg, &data, None).unwrap();
    let b = train(&cfg, &data, None).unwrap();
    assert_eq!(
        metrics_log_deterministic(&a.metrics),
        metrics_log_deterministic(&b.metrics)
    );
    assert_eq!(a.model, b.model);
}

#[test]
fn different_seeds_change_the_run() {
    let data = tiny_data(14, 4, 0, 8);
    let a = train(&quick_cfg(Variant::None, 2, 8), &data, None).unwrap();
    let b = train(&quick_cfg(Variant::None, 2, 9), &data, None).unwrap();
    assert_ne!(a.model, b.model);
}

#[test]
fn early_stopping_fires_after_patience_flat_epochs() {
    // trivial corpus: validation saturates almost immediately, after which
    // BLEU never improves again
    let data = tiny_data(6, 3, 0, 9);
    let mut cfg = quick_cfg(Variant::None, 400, 9);
    cfg.patience = 5;
    cfg.lr_model = 2e-3;
    cfg.batch_size = 6;
    let result = train(&cfg, &data, None).unwrap();
    assert!(result.stopped_early, "ran all {} epochs", result.metrics.len());
    assert_eq!(
        result.metrics.len(),
        result.best_epoch + 5,
        "stopped at {} with best at {}",
        result.metrics.len(),
        result.best_epoch
    );
}

#[test]
fn checkpoint_round_trips_bit_for_bit() {
    let data = tiny_data(10, 3, 1, 10);
    let mut trainer = Trainer::new(quick_cfg(Variant::QWaae, 2, 10), &data).unwrap();
    trainer.run_epoch(&data).unwrap();
    let ckpt = trainer.checkpoint_with_vocabs(&data);
    let bytes = ckpt.to_bytes();
    let restored = Checkpoint::from_bytes(&bytes).unwrap();
    assert_eq!(ckpt, restored);
    assert_eq!(bytes, restored.to_bytes());
}

#[test]
fn corrupted_checkpoints_are_rejected() {
    let data = tiny_data(8, 3, 0, 11);
    let mut trainer = Trainer::new(quick_cfg(Variant::None, 1, 11), &data).unwrap();
    trainer.run_epoch(&data).unwrap();
    let bytes = trainer.checkpoint_with_vocabs(&data).to_bytes();
    // flip one byte somewhere in the middle
    for &pos in &[20usize, bytes.len() / 2, bytes.len() - 20] {
        let mut bad = bytes.clone();
        bad[pos] ^= 0x40;
        match Checkpoint::from_bytes(&bad) {
            Err(Error::Format { msg, .. }) => {
                assert!(msg.contains("checksum"), "{msg}")
            }
            other => panic!("corruption at {pos} not caught: {other:?}"),
        }
    }
    // truncation
    match Checkpoint::from_bytes(&bytes[..bytes.len() - 3]) {
        Err(Error::Format { .. }) => {}
        other => panic!("truncation not caught: {other:?}"),
    }
}

#[test]
fn resumed_training_matches_the_uninterrupted_run() {
    let data = tiny_data(12, 4, 1, 12);
    let total = 6usize;
    let cut = 3usize;

    let mut straight = Trainer::new(quick_cfg(Variant::QWaae, total, 12), &data).unwrap();
    for _ in 0..total {
        straight.run_epoch(&data).unwrap();
    }

    let mut first = Trainer::new(quick_cfg(Variant::QWaae, total, 12), &data).unwrap();
    for _ in 0..cut {
        first.run_epoch(&data).unwrap();
    }
    let bytes = first.checkpoint_with_vocabs(&data).to_bytes();
    drop(first);
    let mut resumed =
        Trainer::from_checkpoint(Checkpoint::from_bytes(&bytes).unwrap(), &data).unwrap();
    for _ in 0..(total - cut) {
        resumed.run_epoch(&data).unwrap();
    }

    assert_eq!(straight.model, resumed.model);
    assert_eq!(straight.adv, resumed.adv);
    assert_eq!(
        metrics_log_deterministic(&straight.metrics),
        metrics_log_deterministic(&resumed.metrics)
    );
}

#[test]
fn checkpoint_vocab_hash_mismatch_is_detected() {
    let data = tiny_data(10, 3, 0, 13);
    let other = tiny_data(10, 3, 2, 14);
    let mut trainer = Trainer::new(quick_cfg(Variant::None, 1, 13), &data).unwrap();
    trainer.run_epoch(&data).unwrap();
    let ckpt = trainer.checkpoint_with_vocabs(&data);
    assert!(Trainer::from_checkpoint(ckpt, &other).is_err());
}

#[test]
fn epoch_metrics_line_is_tab_separated() {
    let m = EpochMetrics {
        epoch: 3,
        train_lq: 1.234567,
        train_aux: 0.5,
        val_bleu: 93.25,
        amb_accuracy: Some(0.75),
        seconds: 2.0,
    };
    assert_eq!(m.tsv_line(), "3\t1.234567\t0.500000\t93.25\t0.7500\t2.000");
    let none = EpochMetrics {
        amb_accuracy: None,
        ..m
    };
    assert!(none.tsv_line().contains("\t-\t"));
}

#[test]
fn non_finite_configuration_is_rejected_up_front() {
    let mut cfg = TrainConfig::default();
    cfg.patience = 0;
    assert!(cfg.validate().is_err());
    let mut cfg = TrainConfig::default();
    cfg.clip_norm = 0.0;
    assert!(cfg.validate().is_err());
}
