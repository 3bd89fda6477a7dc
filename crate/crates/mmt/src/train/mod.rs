//! Joint optimization of the translation model and its auxiliary
//! reconstruction objective.

mod adam;
mod checkpoint;
mod harness;

pub use adam::{adam_step, AdamHyper, AdamState};
pub use checkpoint::Checkpoint;
pub use harness::{
    run_ablation, run_lambda_sweep, AblationReport, AblationRow, SweepCell, SweepReport,
    ABLATION_ROWS, DEFAULT_SWEEP_GRID,
};

use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::adversarial::{
    critic_wgan, generate_waae, generate_wgan, sample_normal, waae_losses,
    wgan_generator_loss, wgan_losses, AdvConfig, AdvParams, Variant, WaaeParams, WganParams,
};
use crate::autodiff::{clip_gradient_norm, Gradients, Tape, Tensor, Value};
use crate::data::{make_batches, Batch, FeatureStore, Vocabulary};
use crate::error::{Error, Result};
use crate::eval::{bleu, grounding_accuracy};
use crate::model::{translate_batch, ModelDims, ModelQParams, Preset};
use crate::rng::Rng;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub adv: AdvConfig,
    pub preset: Preset,
    pub batch_size: usize,
    pub clip_norm: f64,
    pub patience: usize,
    pub max_epochs: usize,
    pub seed: u64,
    pub lr_model: f64,
    pub lr_critic: f64,
    /// Zero the feature vector in the translation path while keeping the
    /// true features as the reconstruction target.
    pub zero_visual: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            adv: AdvConfig::default(),
            preset: Preset::Desk,
            batch_size: 32,
            clip_norm: 1.0,
            patience: 5,
            max_epochs: 50,
            seed: 1,
            lr_model: 4e-4,
            lr_critic: 2e-4,
            zero_visual: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.adv.validate()?;
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        if self.clip_norm <= 0.0 {
            return Err(Error::Config("clip_norm must be positive".into()));
        }
        if self.patience == 0 {
            return Err(Error::Config("patience must be at least 1".into()));
        }
        if self.max_epochs == 0 {
            return Err(Error::Config("max_epochs must be at least 1".into()));
        }
        Ok(())
    }
}

/// An encoded corpus split with its aligned features.
#[derive(Clone, Debug)]
pub struct DataSet {
    pub pairs: Vec<(Vec<u32>, Vec<u32>)>,
    pub features: FeatureStore,
    /// Raw target tokens, for scoring.
    pub refs: Vec<Vec<String>>,
    pub annotations: Option<Vec<Vec<usize>>>,
}

/// Everything a training run consumes.
#[derive(Clone, Debug)]
pub struct TrainData {
    pub src_vocab: Vocabulary,
    pub tgt_vocab: Vocabulary,
    pub train: DataSet,
    pub valid: DataSet,
    pub lexicon: Option<Vec<(String, Vec<String>)>>,
    pub bpe_hash: u64,
}

impl TrainData {
    /// Build vocabularies from the training split and encode both splits.
    pub fn from_tokenized(
        train_src: Vec<Vec<String>>,
        train_tgt: Vec<Vec<String>>,
        train_features: FeatureStore,
        valid_src: Vec<Vec<String>>,
        valid_tgt: Vec<Vec<String>>,
        valid_features: FeatureStore,
    ) -> Result<TrainData> {
        if train_src.len() != train_tgt.len() || valid_src.len() != valid_tgt.len() {
            return Err(Error::Data("parallel corpus length mismatch".into()));
        }
        if train_src.is_empty() || valid_src.is_empty() {
            return Err(Error::Data("empty corpus split".into()));
        }
        if train_src.iter().chain(&valid_src).any(|s| s.is_empty()) {
            return Err(Error::Data("empty source sentence".into()));
        }
        if train_features.d() != valid_features.d() {
            return Err(Error::Data(format!(
                "feature dimensions differ across splits: {} vs {}",
                train_features.d(),
                valid_features.d()
            )));
        }
        let src_vocab = Vocabulary::build(&train_src);
        let tgt_vocab = Vocabulary::build(&train_tgt);
        let encode = |src: &[Vec<String>], tgt: &[Vec<String>]| -> Vec<(Vec<u32>, Vec<u32>)> {
            src.iter()
                .zip(tgt)
                .map(|(s, t)| (src_vocab.encode(s), tgt_vocab.encode(t)))
                .collect()
        };
        let train_pairs = encode(&train_src, &train_tgt);
        let valid_pairs = encode(&valid_src, &valid_tgt);
        if train_pairs.len() > train_features.n() || valid_pairs.len() > valid_features.n() {
            return Err(Error::Data("feature store shorter than corpus".into()));
        }
        Ok(TrainData {
            src_vocab,
            tgt_vocab,
            train: DataSet {
                pairs: train_pairs,
                features: train_features,
                refs: train_tgt,
                annotations: None,
            },
            valid: DataSet {
                pairs: valid_pairs,
                features: valid_features,
                refs: valid_tgt,
                annotations: None,
            },
            lexicon: None,
            bpe_hash: 0,
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TrainStats {
    pub critic_updates: u64,
    pub generator_updates: u64,
    pub translation_updates: u64,
    /// Largest global gradient norm observed after clipping, over all
    /// updates of translation-model parameters.
    pub max_postclip_norm: f64,
    /// Updates whose pre-clip norm exceeded the threshold.
    pub clip_events: u64,
    /// Log-floor clamps observed inside losses.
    pub ln_clamps: u64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochMetrics {
    pub epoch: usize,
    /// Mean translation loss per sentence.
    pub train_lq: f64,
    /// Mean auxiliary (generator-side) loss per sentence; 0 without one.
    pub train_aux: f64,
    /// Validation BLEU on the 0-100 scale.
    pub val_bleu: f64,
    pub amb_accuracy: Option<f64>,
    pub seconds: f64,
}

impl EpochMetrics {
    /// Tab-separated log line: epoch, train loss, aux loss, BLEU,
    /// ambiguous-token accuracy ("-" when unavailable), wall seconds.
    pub fn tsv_line(&self) -> String {
        let acc = match self.amb_accuracy {
            Some(a) => format!("{a:.4}"),
            None => "-".to_string(),
        };
        format!(
            "{}\t{:.6}\t{:.6}\t{:.2}\t{}\t{:.3}",
            self.epoch, self.train_lq, self.train_aux, self.val_bleu, acc, self.seconds
        )
    }
}

/// Render the full metrics log.
pub fn metrics_log(rows: &[EpochMetrics]) -> String {
    let mut out = String::new();
    for r in rows {
        out.push_str(&r.tsv_line());
        out.push('\n');
    }
    out
}

/// The strippable part of a metrics log for determinism comparisons:
/// everything except the trailing wall-clock column.
pub fn metrics_log_deterministic(rows: &[EpochMetrics]) -> String {
    let mut out = String::new();
    for r in rows {
        let line = r.tsv_line();
        let cut = line.rfind('\t').unwrap_or(line.len());
        out.push_str(&line[..cut]);
        out.push('\n');
    }
    out
}

pub struct TrainResult {
    pub model: ModelQParams,
    pub adv: AdvParams,
    pub metrics: Vec<EpochMetrics>,
    pub stats: TrainStats,
    pub best_epoch: usize,
    pub best_val_bleu: f64,
    pub stopped_early: bool,
}

/// Incremental trainer; checkpointable between epochs.
pub struct Trainer {
    pub cfg: TrainConfig,
    pub dims: ModelDims,
    pub model: ModelQParams,
    pub adv: AdvParams,
    adam_q: AdamState,
    adam_g: AdamState,
    adam_d: AdamState,
    rng: Rng,
    pub epoch: usize,
    best_val_bleu: f64,
    best_epoch: usize,
    epochs_since_best: usize,
    best_model: Option<(ModelQParams, AdvParams)>,
    pub stats: TrainStats,
    pub metrics: Vec<EpochMetrics>,
    src_vocab_hash: u64,
    tgt_vocab_hash: u64,
    bpe_hash: u64,
}

fn adv_params_for(cfg: &TrainConfig, dims: &ModelDims, rng: &mut Rng) -> AdvParams {
    match cfg.adv.variant {
        Variant::None => AdvParams::None,
        Variant::RegressionOnly | Variant::QWaae => {
            AdvParams::Waae(WaaeParams::init(dims.dec_hidden, dims.feat_dim, rng))
        }
        Variant::GWgan => AdvParams::Wgan(WganParams::init(
            dims.dec_hidden,
            dims.feat_dim,
            cfg.adv.noise_dim,
            rng,
        )),
    }
}

fn split_fields<'a>(
    fields: Vec<(&'static str, &'a Tensor)>,
    idx: &[usize],
) -> Vec<&'a Tensor> {
    idx.iter().map(|&i| fields[i].1).collect()
}

impl Trainer {
    pub fn new(cfg: TrainConfig, data: &TrainData) -> Result<Trainer> {
        cfg.validate()?;
        let mut dims = ModelDims::from_preset(cfg.preset, data.src_vocab.len(), data.tgt_vocab.len());
        dims.feat_dim = data.train.features.d();
        let mut init_rng = Rng::seed_from(cfg.seed);
        let model = ModelQParams::init(dims, &mut init_rng);
        let adv = adv_params_for(&cfg, &dims, &mut init_rng);

        let q_shapes: Vec<&Tensor> = model.fields().into_iter().map(|(_, t)| t).collect();
        let (g_shapes, d_shapes): (Vec<&Tensor>, Vec<&Tensor>) = match &adv {
            AdvParams::None => (vec![], vec![]),
            AdvParams::Waae(p) => (
                split_fields(p.fields(), &WaaeParams::GENERATOR_FIELDS),
                split_fields(p.fields(), &WaaeParams::CRITIC_FIELDS),
            ),
            AdvParams::Wgan(p) => (
                split_fields(p.fields(), &WganParams::GENERATOR_FIELDS),
                split_fields(p.fields(), &WganParams::CRITIC_FIELDS),
            ),
        };
        let adam_q = AdamState::new(AdamHyper::model(cfg.lr_model), &q_shapes);
        let adam_g = AdamState::new(AdamHyper::model(cfg.lr_model), &g_shapes);
        let adam_d = AdamState::new(AdamHyper::critic(cfg.lr_critic), &d_shapes);

        let rng = Rng::seed_from(cfg.seed ^ 0x545241494e);
        Ok(Trainer {
            cfg,
            dims,
            model,
            adv,
            adam_q,
            adam_g,
            adam_d,
            rng,
            epoch: 0,
            best_val_bleu: f64::NEG_INFINITY,
            best_epoch: 0,
            epochs_since_best: 0,
            best_model: None,
            stats: TrainStats::default(),
            metrics: Vec::new(),
            src_vocab_hash: data.src_vocab.hash(),
            tgt_vocab_hash: data.tgt_vocab.hash(),
            bpe_hash: data.bpe_hash,
        })
    }

    /// Restore a trainer mid-run; the data must hash to what was trained on.
    pub fn from_checkpoint(ckpt: Checkpoint, data: &TrainData) -> Result<Trainer> {
        if ckpt.src_vocab_hash != data.src_vocab.hash()
            || ckpt.tgt_vocab_hash != data.tgt_vocab.hash()
        {
            return Err(Error::Data(
                "checkpoint vocabulary hash does not match the loaded corpus".into(),
            ));
        }
        Ok(Trainer {
            cfg: ckpt.config,
            dims: ckpt.dims,
            model: ckpt.model,
            adv: ckpt.adv,
            adam_q: ckpt.adam_q,
            adam_g: ckpt.adam_g,
            adam_d: ckpt.adam_d,
            rng: Rng::restore(ckpt.rng_state),
            epoch: ckpt.epoch,
            best_val_bleu: ckpt.best_val_bleu,
            best_epoch: ckpt.best_epoch,
            epochs_since_best: ckpt.epochs_since_best,
            best_model: ckpt.best_model,
            stats: ckpt.stats,
            metrics: ckpt.metrics,
            src_vocab_hash: ckpt.src_vocab_hash,
            tgt_vocab_hash: ckpt.tgt_vocab_hash,
            bpe_hash: ckpt.bpe_hash,
        })
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            config: self.cfg.clone(),
            dims: self.dims,
            src_vocab_tokens: vec![],
            tgt_vocab_tokens: vec![],
            src_vocab_hash: self.src_vocab_hash,
            tgt_vocab_hash: self.tgt_vocab_hash,
            bpe_hash: self.bpe_hash,
            model: self.model.clone(),
            adv: self.adv.clone(),
            adam_q: self.adam_q.clone(),
            adam_g: self.adam_g.clone(),
            adam_d: self.adam_d.clone(),
            epoch: self.epoch,
            best_val_bleu: self.best_val_bleu,
            best_epoch: self.best_epoch,
            epochs_since_best: self.epochs_since_best,
            best_model: self.best_model.clone(),
            stats: self.stats,
            rng_state: self.rng.state(),
            metrics: self.metrics.clone(),
        }
    }

    /// Checkpoint carrying the vocabularies, for decoding later.
    pub fn checkpoint_with_vocabs(&self, data: &TrainData) -> Checkpoint {
        let mut c = self.checkpoint();
        c.src_vocab_tokens = data.src_vocab.tokens().to_vec();
        c.tgt_vocab_tokens = data.tgt_vocab.tokens().to_vec();
        c
    }

    fn collect(grads: &mut Gradients, handles: &[Value]) -> Result<Vec<Tensor>> {
        handles
            .iter()
            .map(|&h| {
                grads
                    .take(h)
                    .ok_or_else(|| Error::Contract("missing gradient for a parameter".into()))
            })
            .collect()
    }

    /// Clip the whole gradient map and record the norms. Returns nothing;
    /// statistics land in `self.stats`.
    fn clip_and_record(&mut self, grads: &mut Gradients) {
        let pre = clip_gradient_norm(grads, self.cfg.clip_norm);
        if pre > self.cfg.clip_norm {
            self.stats.clip_events += 1;
        }
        let post = grads.global_norm();
        if post > self.stats.max_postclip_norm {
            self.stats.max_postclip_norm = post;
        }
    }

    fn apply_q(&mut self, grads: Vec<Tensor>) -> Result<()> {
        let mut fields = self.model.fields_mut();
        adam_step(&mut fields, &grads, &mut self.adam_q)
    }

    fn apply_adv(&mut self, critic: bool, grads: Vec<Tensor>) -> Result<()> {
        let idx: &[usize] = match (&self.adv, critic) {
            (AdvParams::Waae(_), false) => &WaaeParams::GENERATOR_FIELDS,
            (AdvParams::Waae(_), true) => &WaaeParams::CRITIC_FIELDS,
            (AdvParams::Wgan(_), false) => &WganParams::GENERATOR_FIELDS,
            (AdvParams::Wgan(_), true) => &WganParams::CRITIC_FIELDS,
            (AdvParams::None, _) => {
                return Err(Error::Contract("no auxiliary parameters to update".into()))
            }
        };
        let mut fields = self.adv.fields_mut();
        let mut group: Vec<(&'static str, &mut Tensor)> = Vec::with_capacity(idx.len());
        for (pos, field) in fields.drain(..).enumerate() {
            if idx.contains(&pos) {
                group.push(field);
            }
        }
        let state = if critic {
            &mut self.adam_d
        } else {
            &mut self.adam_g
        };
        adam_step(&mut group, &grads, state)
    }

    fn waae(&self) -> Result<WaaeParams> {
        match &self.adv {
            AdvParams::Waae(p) => Ok(p.clone()),
            _ => Err(Error::Contract("expected latent-variant parameters".into())),
        }
    }

    fn wgan(&self) -> Result<WganParams> {
        match &self.adv {
            AdvParams::Wgan(p) => Ok(p.clone()),
            _ => Err(Error::Contract("expected feature-variant parameters".into())),
        }
    }

    /// One optimization pass over a batch. Returns (translation loss,
    /// auxiliary generator-side loss) as batch sums.
    fn train_batch(&mut self, batch: &Batch) -> Result<(f64, f64)> {
        let tape = Tape::new();
        let taped_q = self.model.leaf_onto(&tape, true)?;
        let q_handles = ModelQParams::leaf_handles(&taped_q);

        let translation_feats = if self.cfg.zero_visual {
            Tensor::zeros(vec![batch.size, self.dims.feat_dim])
        } else {
            batch.features.clone()
        };
        let trans_feats = tape.constant(translation_feats)?;
        let fp = crate::model::forward_batch(&tape, &taped_q, batch, trans_feats, true, &mut self.rng)?;
        let lq_value = tape.scalar_of(fp.loss);
        let mut aux_value = 0.0;

        // reconstruction always targets the true features
        let real_feats = tape.constant(batch.features.clone())?;

        let cfg_adv = self.cfg.adv;
        match self.cfg.adv.variant {
            Variant::None => {}
            Variant::RegressionOnly | Variant::QWaae => {
                // 1. critic update on a private tape (latent variant only);
                //    h_T is reused from the forward pass as plain data
                if self.cfg.adv.variant == Variant::QWaae {
                    let waae_now = self.waae()?;
                    let tape_c = Tape::new();
                    let taped_c = waae_now.leaf_onto(&tape_c, false, true)?;
                    let h_const = tape_c.constant(tape.tensor(fp.h_final))?;
                    let v_real_c = tape_c.constant(batch.features.clone())?;
                    let v_fake_c = generate_waae(&tape_c, &taped_c, h_const)?;
                    let prior = tape_c.constant(sample_normal(
                        batch.size,
                        self.dims.dec_hidden,
                        &mut self.rng,
                    ))?;
                    let parts = waae_losses(
                        &tape_c, &taped_c, h_const, v_real_c, v_fake_c, prior, &cfg_adv,
                        &mut self.rng,
                    )?;
                    let mut grads = tape_c.backward(parts.critic_loss)?;
                    let d_handles =
                        split_handles(&taped_c.handles(), &WaaeParams::CRITIC_FIELDS);
                    let d_grads = Self::collect(&mut grads, &d_handles)?;
                    self.apply_adv(true, d_grads)?;
                    self.stats.critic_updates += 1;
                    self.stats.ln_clamps += tape_c.clamp_warnings();
                }

                // 2. encoder/generator update through the model, against the
                //    freshly updated critic
                let waae_now = self.waae()?;
                let taped_a = waae_now.leaf_onto(&tape, true, false)?;
                let v_fake = generate_waae(&tape, &taped_a, fp.h_final)?;
                let prior = tape.constant(sample_normal(
                    batch.size,
                    self.dims.dec_hidden,
                    &mut self.rng,
                ))?;
                let parts = waae_losses(
                    &tape, &taped_a, fp.h_final, real_feats, v_fake, prior, &cfg_adv,
                    &mut self.rng,
                )?;
                let enc_gen_loss = match self.cfg.adv.variant {
                    Variant::RegressionOnly => parts.reconstruction,
                    _ => parts.encoder_generator_loss,
                };
                aux_value = tape.scalar_of(enc_gen_loss);
                let mut grads = tape.backward(enc_gen_loss)?;
                self.clip_and_record(&mut grads);
                let g_handles = split_handles(&taped_a.handles(), &WaaeParams::GENERATOR_FIELDS);
                let g_grads = Self::collect(&mut grads, &g_handles)?;
                let q_grads = Self::collect(&mut grads, &q_handles)?;
                self.apply_adv(false, g_grads)?;
                self.apply_q(q_grads)?;
                self.stats.generator_updates += 1;
                tape.reset_backward();
            }
            Variant::GWgan => {
                // 1. critic inner loop, fresh noise and interpolation per step
                for _ in 0..cfg_adv.lambda_critic {
                    let wgan_now = self.wgan()?;
                    let tape_c = Tape::new();
                    let taped_c = wgan_now.leaf_onto(&tape_c, false, true)?;
                    let h_const = tape_c.constant(tape.tensor(fp.h_final))?;
                    let z = tape_c.constant(sample_normal(
                        batch.size,
                        cfg_adv.noise_dim,
                        &mut self.rng,
                    ))?;
                    let v_fake = generate_wgan(
                        &tape_c, &taped_c, z, h_const, cfg_adv.gen_dropout, &mut self.rng,
                    )?;
                    let v_real = tape_c.constant(batch.features.clone())?;
                    let (critic_loss, _) = wgan_losses(
                        &tape_c, &taped_c, v_real, v_fake, h_const, &cfg_adv, &mut self.rng,
                    )?;
                    let mut grads = tape_c.backward(critic_loss)?;
                    let d_handles =
                        split_handles(&taped_c.handles(), &WganParams::CRITIC_FIELDS);
                    let d_grads = Self::collect(&mut grads, &d_handles)?;
                    self.apply_adv(true, d_grads)?;
                    self.stats.critic_updates += 1;
                }

                // 2. generator + model adversarial update against the
                //    trained critic
                let wgan_now = self.wgan()?;
                let taped_a = wgan_now.leaf_onto(&tape, true, false)?;
                let z = tape.constant(sample_normal(
                    batch.size,
                    cfg_adv.noise_dim,
                    &mut self.rng,
                ))?;
                let v_fake = generate_wgan(
                    &tape, &taped_a, z, fp.h_final, cfg_adv.gen_dropout, &mut self.rng,
                )?;
                let score_fake = critic_wgan(&tape, &taped_a, v_fake, fp.h_final)?;
                let mean_fake = tape.mean_all(score_fake)?;
                let gen_loss = wgan_generator_loss(&tape, mean_fake, &cfg_adv)?;
                aux_value = tape.scalar_of(gen_loss);
                let mut grads = tape.backward(gen_loss)?;
                self.clip_and_record(&mut grads);
                let g_handles = split_handles(&taped_a.handles(), &WganParams::GENERATOR_FIELDS);
                let g_grads = Self::collect(&mut grads, &g_handles)?;
                let q_grads = Self::collect(&mut grads, &q_handles)?;
                self.apply_adv(false, g_grads)?;
                self.apply_q(q_grads)?;
                self.stats.generator_updates += 1;
                tape.reset_backward();
            }
        }

        // translation update, from the same forward pass
        let mut grads = tape.backward(fp.loss)?;
        self.clip_and_record(&mut grads);
        let q_grads = Self::collect(&mut grads, &q_handles)?;
        self.apply_q(q_grads)?;
        self.stats.translation_updates += 1;

        self.stats.ln_clamps += tape.clamp_warnings();
        Ok((lq_value, aux_value))
    }

    /// Greedy-decode the validation split and score it.
    fn validate(&self, data: &TrainData) -> Result<(f64, Option<f64>)> {
        let valid = &data.valid;
        let max_tgt = valid.pairs.iter().map(|(_, t)| t.len()).max().unwrap_or(8);
        let max_len = max_tgt + 5;
        let batches = make_batches(&valid.pairs, &valid.features, self.cfg.batch_size, 0)?;
        let mut hyps: Vec<Vec<String>> = vec![Vec::new(); valid.pairs.len()];
        for batch in &batches {
            let batch = if self.cfg.zero_visual {
                let mut b = batch.clone();
                b.features = Tensor::zeros(vec![b.size, self.dims.feat_dim]);
                b
            } else {
                batch.clone()
            };
            let (outs, _) = translate_batch(&[&self.model], &batch, max_len)?;
            for (row, ids) in outs.into_iter().enumerate() {
                hyps[batch.indices[row]] = data.tgt_vocab.decode(&ids);
            }
        }
        let ref_strings: Vec<String> = valid.refs.iter().map(|t| t.join(" ")).collect();
        let hyp_strings: Vec<String> = hyps.iter().map(|t| t.join(" ")).collect();
        let score = bleu(&ref_strings, &hyp_strings, false)? * 100.0;

        let accuracy = match (&valid.annotations, &data.lexicon) {
            (Some(ann), Some(lex)) if ann.iter().any(|a| !a.is_empty()) => {
                Some(grounding_accuracy(&valid.refs, &hyps, ann, lex)?)
            }
            _ => None,
        };
        Ok((score, accuracy))
    }

    /// Train one epoch and score it.
    pub fn run_epoch(&mut self, data: &TrainData) -> Result<EpochMetrics> {
        let started = Instant::now();
        let shuffle_seed = self.rng.next_u64();
        let batches = make_batches(
            &data.train.pairs,
            &data.train.features,
            self.cfg.batch_size,
            shuffle_seed,
        )?;
        let mut lq_sum = 0.0;
        let mut aux_sum = 0.0;
        for batch in &batches {
            let (lq, aux) = self.train_batch(batch).map_err(|e| match e {
                Error::Numeric(m) => Error::Numeric(format!("epoch {}: {m}", self.epoch + 1)),
                other => other,
            })?;
            lq_sum += lq;
            aux_sum += aux;
        }
        let n = data.train.pairs.len() as f64;
        let (val_bleu, amb_accuracy) = self.validate(data)?;

        self.epoch += 1;
        let metrics = EpochMetrics {
            epoch: self.epoch,
            train_lq: lq_sum / n,
            train_aux: aux_sum / n,
            val_bleu,
            amb_accuracy,
            seconds: started.elapsed().as_secs_f64(),
        };
        self.metrics.push(metrics);

        if val_bleu > self.best_val_bleu {
            self.best_val_bleu = val_bleu;
            self.best_epoch = self.epoch;
            self.epochs_since_best = 0;
            self.best_model = Some((self.model.clone(), self.adv.clone()));
        } else {
            self.epochs_since_best += 1;
        }
        Ok(metrics)
    }

    pub fn should_stop(&self) -> bool {
        self.epochs_since_best >= self.cfg.patience
    }

    pub fn best(&self) -> (&ModelQParams, &AdvParams) {
        match &self.best_model {
            Some((m, a)) => (m, a),
            None => (&self.model, &self.adv),
        }
    }

    pub fn best_val_bleu(&self) -> f64 {
        self.best_val_bleu
    }

    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }

    pub fn epochs_since_best(&self) -> usize {
        self.epochs_since_best
    }

    fn write_outputs(&self, data: &TrainData, dir: &Path, improved: bool) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("metrics.tsv"), metrics_log(&self.metrics))?;
        self.checkpoint_with_vocabs(data).save(&dir.join("last.ckpt"))?;
        if improved {
            self.checkpoint_with_vocabs(data).save(&dir.join("best.ckpt"))?;
        }
        Ok(())
    }

    /// Run until the epoch budget or the early-stopping patience runs out.
    pub fn run(&mut self, data: &TrainData, out_dir: Option<&Path>) -> Result<TrainResult> {
        while self.epoch < self.cfg.max_epochs && !self.should_stop() {
            let before_best = self.best_epoch;
            self.run_epoch(data)?;
            let improved = self.best_epoch != before_best;
            if let Some(dir) = out_dir {
                self.write_outputs(data, dir, improved)?;
            }
        }
        let (model, adv) = self.best();
        Ok(TrainResult {
            model: model.clone(),
            adv: adv.clone(),
            metrics: self.metrics.clone(),
            stats: self.stats,
            best_epoch: self.best_epoch,
            best_val_bleu: self.best_val_bleu,
            stopped_early: self.should_stop() && self.epoch < self.cfg.max_epochs,
        })
    }
}

fn split_handles(handles: &[Value], idx: &[usize]) -> Vec<Value> {
    idx.iter().map(|&i| handles[i]).collect()
}

/// Train from scratch; convenience over [`Trainer`].
pub fn train(cfg: &TrainConfig, data: &TrainData, out_dir: Option<&Path>) -> Result<TrainResult> {
    let mut trainer = Trainer::new(cfg.clone(), data)?;
    trainer.run(data, out_dir)
}

/// Paths used by file-based training runs.
#[derive(Clone, Debug)]
pub struct DataPaths {
    pub train_src: PathBuf,
    pub train_tgt: PathBuf,
    pub train_feat: PathBuf,
    pub valid_src: PathBuf,
    pub valid_tgt: PathBuf,
    pub valid_feat: PathBuf,
}

impl DataPaths {
    /// Load and encode everything; validation annotations and a sense
    /// lexicon are picked up from `<valid_src>.ann` and `lexicon.txt`
    /// beside the validation source when present.
    pub fn load(&self) -> Result<TrainData> {
        let (train_src, train_tgt) = crate::data::load_parallel(&self.train_src, &self.train_tgt)?;
        let (valid_src, valid_tgt) = crate::data::load_parallel(&self.valid_src, &self.valid_tgt)?;
        let train_features = FeatureStore::load(&self.train_feat)?;
        let valid_features = FeatureStore::load(&self.valid_feat)?;
        let mut data = TrainData::from_tokenized(
            train_src,
            train_tgt,
            train_features,
            valid_src,
            valid_tgt,
            valid_features,
        )?;
        let ann_path = PathBuf::from(format!("{}.ann", self.valid_src.display()));
        if ann_path.is_file() {
            data.valid.annotations = Some(crate::data::load_annotations(&ann_path)?);
        }
        if let Some(dir) = self.valid_src.parent() {
            let lex_path = dir.join("lexicon.txt");
            if lex_path.is_file() {
                data.lexicon = Some(crate::data::load_lexicon(&lex_path)?);
            }
        }
        Ok(data)
    }
}

#[cfg(test)]
mod tests;
