//! Versioned binary checkpoints with integrity checking.
//!
//! Layout: magic `MMCK`, format version, the full training configuration,
//! vocabularies and data hashes, every weight matrix, all optimizer
//! moments, training progress, the RNG state and the metrics rows so far,
//! closed by a 64-bit FNV-1a checksum of everything before it. Writing is
//! fully deterministic, so save → load → save is byte-identical.

use std::fs;
use std::path::Path;

use crate::adversarial::{AdvConfig, AdvParams, Variant, WaaeParams, WganParams};
use crate::autodiff::Tensor;
use crate::data::fnv1a;
use crate::error::{Error, Result};
use crate::model::{GruParams, ModelDims, ModelQParams, Preset};
use crate::train::adam::{AdamHyper, AdamState};
use crate::train::{EpochMetrics, TrainConfig, TrainStats};

pub const MAGIC: &[u8; 4] = b"MMCK";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub config: TrainConfig,
    pub dims: ModelDims,
    pub src_vocab_tokens: Vec<String>,
    pub tgt_vocab_tokens: Vec<String>,
    pub src_vocab_hash: u64,
    pub tgt_vocab_hash: u64,
    pub bpe_hash: u64,
    pub model: ModelQParams,
    pub adv: AdvParams,
    pub adam_q: AdamState,
    pub adam_g: AdamState,
    pub adam_d: AdamState,
    pub epoch: usize,
    pub best_val_bleu: f64,
    pub best_epoch: usize,
    pub epochs_since_best: usize,
    pub best_model: Option<(ModelQParams, AdvParams)>,
    pub stats: TrainStats,
    pub rng_state: [u64; 4],
    pub metrics: Vec<EpochMetrics>,
}

struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn new() -> Writer {
        Writer { buf: Vec::new() }
    }
    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn usize(&mut self, v: usize) {
        self.u64(v as u64);
    }
    fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn string(&mut self, s: &str) {
        self.usize(s.len());
        self.buf.extend_from_slice(s.as_bytes());
    }
    fn tensor(&mut self, t: &Tensor) {
        self.usize(t.shape().len());
        for &d in t.shape() {
            self.usize(d);
        }
        for &v in t.values() {
            self.f64(v);
        }
    }
    fn bool(&mut self, v: bool) {
        self.u8(v as u8);
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn fail<T>(&self, msg: &str) -> Result<T> {
        Err(Error::Format {
            msg: msg.to_string(),
            offset: Some(self.pos as u64),
        })
    }
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return self.fail("truncated checkpoint");
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn usize(&mut self) -> Result<usize> {
        Ok(self.u64()? as usize)
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn string(&mut self) -> Result<String> {
        let n = self.usize()?;
        let bytes = self.take(n)?;
        String::from_utf8(bytes.to_vec())
            .map_err(|_| Error::Format {
                msg: "invalid utf-8 in checkpoint string".into(),
                offset: Some(self.pos as u64),
            })
    }
    fn tensor(&mut self) -> Result<Tensor> {
        let ndim = self.usize()?;
        if ndim > 4 {
            return self.fail("implausible tensor rank");
        }
        let mut shape = Vec::with_capacity(ndim);
        for _ in 0..ndim {
            shape.push(self.usize()?);
        }
        let n: usize = shape.iter().product();
        let mut values = Vec::with_capacity(n);
        for _ in 0..n {
            values.push(self.f64()?);
        }
        Tensor::from_vec(shape, values)
    }
    fn bool(&mut self) -> Result<bool> {
        Ok(self.u8()? != 0)
    }
}

fn write_config(w: &mut Writer, c: &TrainConfig) {
    w.string(c.adv.variant.name());
    w.f64(c.adv.lambda_a);
    w.f64(c.adv.lambda_r);
    w.f64(c.adv.lambda_gp);
    w.usize(c.adv.lambda_critic);
    w.usize(c.adv.noise_dim);
    w.f64(c.adv.gen_dropout);
    w.bool(c.adv.paper_literal_signs);
    w.string(c.preset.name());
    w.usize(c.batch_size);
    w.f64(c.clip_norm);
    w.usize(c.patience);
    w.usize(c.max_epochs);
    w.u64(c.seed);
    w.f64(c.lr_model);
    w.f64(c.lr_critic);
    w.bool(c.zero_visual);
}

fn read_config(r: &mut Reader) -> Result<TrainConfig> {
    Ok(TrainConfig {
        adv: AdvConfig {
            variant: Variant::parse(&r.string()?)?,
            lambda_a: r.f64()?,
            lambda_r: r.f64()?,
            lambda_gp: r.f64()?,
            lambda_critic: r.usize()?,
            noise_dim: r.usize()?,
            gen_dropout: r.f64()?,
            paper_literal_signs: r.bool()?,
        },
        preset: Preset::parse(&r.string()?)?,
        batch_size: r.usize()?,
        clip_norm: r.f64()?,
        patience: r.usize()?,
        max_epochs: r.usize()?,
        seed: r.u64()?,
        lr_model: r.f64()?,
        lr_critic: r.f64()?,
        zero_visual: r.bool()?,
    })
}

fn write_dims(w: &mut Writer, d: &ModelDims) {
    for v in [
        d.src_vocab,
        d.tgt_vocab,
        d.embed,
        d.enc_hidden,
        d.dec_hidden,
        d.bottleneck,
        d.feat_dim,
    ] {
        w.usize(v);
    }
}

fn read_dims(r: &mut Reader) -> Result<ModelDims> {
    Ok(ModelDims {
        src_vocab: r.usize()?,
        tgt_vocab: r.usize()?,
        embed: r.usize()?,
        enc_hidden: r.usize()?,
        dec_hidden: r.usize()?,
        bottleneck: r.usize()?,
        feat_dim: r.usize()?,
    })
}

fn write_model(w: &mut Writer, m: &ModelQParams) {
    let fields = m.fields();
    w.usize(fields.len());
    for (name, t) in fields {
        w.string(name);
        w.tensor(t);
    }
}

fn read_model(r: &mut Reader, dims: ModelDims) -> Result<ModelQParams> {
    let count = r.usize()?;
    if count != 21 {
        return r.fail("unexpected model field count");
    }
    let mut tensors = Vec::with_capacity(count);
    for _ in 0..count {
        let _name = r.string()?;
        tensors.push(r.tensor()?);
    }
    let mut it = tensors.into_iter();
    let mut next = || it.next().expect("count checked above");
    let gru = |wx: Tensor, wh: Tensor, bias: Tensor| -> GruParams {
        let hidden = wh.rows();
        GruParams {
            wx,
            wh,
            bias,
            hidden,
        }
    };
    Ok(ModelQParams {
        dims,
        src_embed: next(),
        tgt_embed: next(),
        enc_fwd: gru(next(), next(), next()),
        enc_bwd: gru(next(), next(), next()),
        dec_gru1: gru(next(), next(), next()),
        dec_gru2: gru(next(), next(), next()),
        w_h: next(),
        w_s: next(),
        w_a: next(),
        w_feat: next(),
        w_c: next(),
        w_bot: next(),
        w_proj: next(),
    })
}

fn write_adv(w: &mut Writer, adv: &AdvParams) {
    match adv {
        AdvParams::None => w.u8(0),
        AdvParams::Waae(p) => {
            w.u8(1);
            for (_, t) in p.fields() {
                w.tensor(t);
            }
        }
        AdvParams::Wgan(p) => {
            w.u8(2);
            w.usize(p.noise_dim);
            for (_, t) in p.fields() {
                w.tensor(t);
            }
        }
    }
}

fn read_adv(r: &mut Reader) -> Result<AdvParams> {
    match r.u8()? {
        0 => Ok(AdvParams::None),
        1 => Ok(AdvParams::Waae(WaaeParams {
            w_rec: r.tensor()?,
            b_rec: r.tensor()?,
            w_adv: r.tensor()?,
            b_adv: r.tensor()?,
        })),
        2 => {
            let noise_dim = r.usize()?;
            Ok(AdvParams::Wgan(WganParams {
                w_rec: r.tensor()?,
                b_rec: r.tensor()?,
                w_adv1: r.tensor()?,
                b_adv1: r.tensor()?,
                w_adv2: r.tensor()?,
                b_adv2: r.tensor()?,
                w_adv3: r.tensor()?,
                b_adv3: r.tensor()?,
                noise_dim,
            }))
        }
        _ => r.fail("unknown auxiliary-parameter tag"),
    }
}

fn write_adam(w: &mut Writer, a: &AdamState) {
    w.f64(a.hyper.lr);
    w.f64(a.hyper.beta1);
    w.f64(a.hyper.beta2);
    w.f64(a.hyper.eps);
    w.u64(a.step);
    w.usize(a.moments.len());
    for (m, v) in &a.moments {
        w.tensor(m);
        w.tensor(v);
    }
}

fn read_adam(r: &mut Reader) -> Result<AdamState> {
    let hyper = AdamHyper {
        lr: r.f64()?,
        beta1: r.f64()?,
        beta2: r.f64()?,
        eps: r.f64()?,
    };
    let step = r.u64()?;
    let count = r.usize()?;
    let mut moments = Vec::with_capacity(count);
    for _ in 0..count {
        moments.push((r.tensor()?, r.tensor()?));
    }
    Ok(AdamState {
        hyper,
        step,
        moments,
    })
}

fn write_stats(w: &mut Writer, s: &TrainStats) {
    w.u64(s.critic_updates);
    w.u64(s.generator_updates);
    w.u64(s.translation_updates);
    w.f64(s.max_postclip_norm);
    w.u64(s.clip_events);
    w.u64(s.ln_clamps);
}

fn read_stats(r: &mut Reader) -> Result<TrainStats> {
    Ok(TrainStats {
        critic_updates: r.u64()?,
        generator_updates: r.u64()?,
        translation_updates: r.u64()?,
        max_postclip_norm: r.f64()?,
        clip_events: r.u64()?,
        ln_clamps: r.u64()?,
    })
}

fn write_metrics(w: &mut Writer, rows: &[EpochMetrics]) {
    w.usize(rows.len());
    for m in rows {
        w.usize(m.epoch);
        w.f64(m.train_lq);
        w.f64(m.train_aux);
        w.f64(m.val_bleu);
        match m.amb_accuracy {
            Some(a) => {
                w.u8(1);
                w.f64(a);
            }
            None => w.u8(0),
        }
        w.f64(m.seconds);
    }
}

fn read_metrics(r: &mut Reader) -> Result<Vec<EpochMetrics>> {
    let count = r.usize()?;
    let mut rows = Vec::with_capacity(count);
    for _ in 0..count {
        rows.push(EpochMetrics {
            epoch: r.usize()?,
            train_lq: r.f64()?,
            train_aux: r.f64()?,
            val_bleu: r.f64()?,
            amb_accuracy: if r.u8()? == 1 { Some(r.f64()?) } else { None },
            seconds: r.f64()?,
        });
    }
    Ok(rows)
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.buf.extend_from_slice(MAGIC);
        w.u32(VERSION);
        write_config(&mut w, &self.config);
        write_dims(&mut w, &self.dims);
        w.usize(self.src_vocab_tokens.len());
        for t in &self.src_vocab_tokens {
            w.string(t);
        }
        w.usize(self.tgt_vocab_tokens.len());
        for t in &self.tgt_vocab_tokens {
            w.string(t);
        }
        w.u64(self.src_vocab_hash);
        w.u64(self.tgt_vocab_hash);
        w.u64(self.bpe_hash);
        write_model(&mut w, &self.model);
        write_adv(&mut w, &self.adv);
        write_adam(&mut w, &self.adam_q);
        write_adam(&mut w, &self.adam_g);
        write_adam(&mut w, &self.adam_d);
        w.usize(self.epoch);
        w.f64(self.best_val_bleu);
        w.usize(self.best_epoch);
        w.usize(self.epochs_since_best);
        match &self.best_model {
            Some((m, a)) => {
                w.u8(1);
                write_model(&mut w, m);
                write_adv(&mut w, a);
            }
            None => w.u8(0),
        }
        write_stats(&mut w, &self.stats);
        for s in self.rng_state {
            w.u64(s);
        }
        write_metrics(&mut w, &self.metrics);
        let checksum = fnv1a(&w.buf);
        w.u64(checksum);
        w.buf
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Checkpoint> {
        if bytes.len() < 16 {
            return Err(Error::Format {
                msg: "checkpoint too short".into(),
                offset: Some(bytes.len() as u64),
            });
        }
        let (body, tail) = bytes.split_at(bytes.len() - 8);
        let stored = u64::from_le_bytes(tail.try_into().unwrap());
        let computed = fnv1a(body);
        if stored != computed {
            return Err(Error::Format {
                msg: format!(
                    "checkpoint checksum mismatch (stored {stored:#x}, computed {computed:#x})"
                ),
                offset: Some(body.len() as u64),
            });
        }
        let mut r = Reader { buf: body, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::Format {
                msg: "bad checkpoint magic".into(),
                offset: Some(0),
            });
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::Format {
                msg: format!("unsupported checkpoint version {version}"),
                offset: Some(4),
            });
        }
        let config = read_config(&mut r)?;
        let dims = read_dims(&mut r)?;
        let n_src = r.usize()?;
        let mut src_vocab_tokens = Vec::with_capacity(n_src);
        for _ in 0..n_src {
            src_vocab_tokens.push(r.string()?);
        }
        let n_tgt = r.usize()?;
        let mut tgt_vocab_tokens = Vec::with_capacity(n_tgt);
        for _ in 0..n_tgt {
            tgt_vocab_tokens.push(r.string()?);
        }
        let src_vocab_hash = r.u64()?;
        let tgt_vocab_hash = r.u64()?;
        let bpe_hash = r.u64()?;
        let model = read_model(&mut r, dims)?;
        let adv = read_adv(&mut r)?;
        let adam_q = read_adam(&mut r)?;
        let adam_g = read_adam(&mut r)?;
        let adam_d = read_adam(&mut r)?;
        let epoch = r.usize()?;
        let best_val_bleu = r.f64()?;
        let best_epoch = r.usize()?;
        let epochs_since_best = r.usize()?;
        let best_model = if r.u8()? == 1 {
            let m = read_model(&mut r, dims)?;
            let a = read_adv(&mut r)?;
            Some((m, a))
        } else {
            None
        };
        let stats = read_stats(&mut r)?;
        let rng_state = [r.u64()?, r.u64()?, r.u64()?, r.u64()?];
        let metrics = read_metrics(&mut r)?;
        if r.pos != body.len() {
            return Err(Error::Format {
                msg: format!("{} trailing bytes in checkpoint", body.len() - r.pos),
                offset: Some(r.pos as u64),
            });
        }
        Ok(Checkpoint {
            config,
            dims,
            src_vocab_tokens,
            tgt_vocab_tokens,
            src_vocab_hash,
            tgt_vocab_hash,
            bpe_hash,
            model,
            adv,
            adam_q,
            adam_g,
            adam_d,
            epoch,
            best_val_bleu,
            best_epoch,
            epochs_since_best,
            best_model,
            stats,
            rng_state,
            metrics,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Checkpoint> {
        let bytes = fs::read(path).map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
        Checkpoint::from_bytes(&bytes)
    }
}
