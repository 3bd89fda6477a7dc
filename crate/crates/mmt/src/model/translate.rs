//! Inference: greedy and beam decoding, optionally over an ensemble.

use crate::autodiff::{Tape, Tensor, Value};
use crate::data::{Batch, BOS, EOS, PAD};
use crate::error::{Error, Result};
use crate::model::forward::{
    decode_step, encode, prepare_attention, AttentionCtx, TapedModelQ,
};
use crate::model::params::ModelQParams;
use crate::rng::Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DecodeMode {
    Greedy,
    /// Beam search keeping k length-normalized best prefixes.
    Beam(usize),
}

#[derive(Clone, Debug)]
pub struct Translation {
    /// Emitted ids, without control tokens.
    pub tokens: Vec<u32>,
    /// Final decoder hidden state of the produced sequence (first model).
    pub h_final: Vec<f64>,
}

struct ModelCtx {
    taped: TapedModelQ,
    ctx: AttentionCtx,
}

fn ensure_compatible(models: &[&ModelQParams]) -> Result<()> {
    if models.is_empty() {
        return Err(Error::Contract("translate: no models".into()));
    }
    let d0 = models[0].dims;
    for m in &models[1..] {
        if m.dims != d0 {
            return Err(Error::Contract(
                "translate: ensemble models disagree on vocabulary or dimensions".into(),
            ));
        }
    }
    Ok(())
}

fn setup(
    tape: &Tape,
    model: &ModelQParams,
    src: &[u32],
    src_mask: &[f64],
    batch: usize,
    t_src: usize,
    features: Value,
    rng: &mut Rng,
) -> Result<ModelCtx> {
    let taped = model.leaf_onto(tape, false)?;
    let encoded = encode(tape, &taped, src, src_mask, batch, t_src, false, rng)?;
    let ctx = prepare_attention(tape, &taped, &encoded, features)?;
    Ok(ModelCtx { taped, ctx })
}

fn argmax(row: &[f64]) -> usize {
    row.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| {
            if v > bv {
                (i, v)
            } else {
                (bi, bv)
            }
        })
        .0
}

/// Greedy-decode a whole batch, averaging stepwise distributions across the
/// ensemble. Returns emitted ids per batch row (no control tokens) and the
/// first model's final hidden state rows.
pub fn translate_batch(
    models: &[&ModelQParams],
    batch: &Batch,
    max_len: usize,
) -> Result<(Vec<Vec<u32>>, Vec<Vec<f64>>)> {
    ensure_compatible(models)?;
    let mut rng = Rng::seed_from(0); // inference never draws from it
    let tape = Tape::inference();
    let b = batch.size;
    let hdim = models[0].dims.dec_hidden;
    let features = tape.constant(batch.features.clone())?;
    let mut ctxs = Vec::with_capacity(models.len());
    for m in models {
        ctxs.push(setup(
            &tape,
            m,
            &batch.src,
            &batch.src_mask,
            b,
            batch.t_src,
            features,
            &mut rng,
        )?);
    }

    let mut hidden: Vec<Value> = ctxs
        .iter()
        .map(|_| tape.constant(Tensor::zeros(vec![b, hdim])))
        .collect::<Result<_>>()?;
    let mut prev = vec![BOS; b];
    let mut done = vec![false; b];
    let mut out: Vec<Vec<u32>> = vec![Vec::new(); b];
    let mut h_final = vec![vec![0.0; hdim]; b];

    for _ in 0..=max_len {
        let mut avg = vec![0.0; b * models[0].dims.tgt_vocab];
        let mut new_hidden = Vec::with_capacity(ctxs.len());
        for (mi, mctx) in ctxs.iter().enumerate() {
            let (p, h) =
                decode_step(&tape, &mctx.taped, &mctx.ctx, &prev, hidden[mi], false, &mut rng)?;
            let pt = tape.tensor(p);
            for (acc, &v) in avg.iter_mut().zip(pt.values()) {
                *acc += v / models.len() as f64;
            }
            new_hidden.push(h);
        }
        let h0 = tape.tensor(new_hidden[0]);
        hidden = new_hidden;

        let v = models[0].dims.tgt_vocab;
        let mut all_done = true;
        for i in 0..b {
            if done[i] {
                prev[i] = PAD;
                continue;
            }
            let choice = argmax(&avg[i * v..(i + 1) * v]) as u32;
            if choice == EOS || out[i].len() >= max_len {
                done[i] = true;
                h_final[i].copy_from_slice(h0.row(i));
            } else {
                out[i].push(choice);
                prev[i] = choice;
                all_done = false;
            }
        }
        if all_done {
            break;
        }
    }
    // sentences cut at max_len keep their last computed state
    for i in 0..b {
        if !done[i] {
            let h0 = tape.tensor(hidden[0]);
            h_final[i].copy_from_slice(h0.row(i));
        }
    }
    Ok((out, h_final))
}

fn single_batch(src: &[u32], features: &[f64], feat_dim: usize) -> Result<(Batch, usize)> {
    let t_src = src.len();
    if t_src == 0 {
        return Err(Error::Contract("translate: empty source".into()));
    }
    let batch = Batch {
        src: src.to_vec(),
        src_mask: vec![1.0; t_src],
        tgt: vec![],
        tgt_mask: vec![],
        features: Tensor::from_vec(vec![1, feat_dim], features.to_vec())?,
        indices: vec![0],
        size: 1,
        t_src,
        t_tgt: 0,
    };
    Ok((batch, t_src))
}

/// Translate one sentence. Greedy mode follows the averaged argmax; beam
/// mode keeps the k best length-normalized prefixes and re-runs the winner
/// teacher-forced to produce a well-defined final state.
pub fn translate(
    models: &[&ModelQParams],
    src: &[u32],
    features: &[f64],
    mode: DecodeMode,
    max_len: usize,
) -> Result<Translation> {
    ensure_compatible(models)?;
    let dims = models[0].dims;
    if features.len() != dims.feat_dim {
        return Err(Error::Data(format!(
            "translate: feature dimension {} but model expects {}",
            features.len(),
            dims.feat_dim
        )));
    }
    match mode {
        DecodeMode::Greedy => {
            let (batch, _) = single_batch(src, features, dims.feat_dim)?;
            let (outs, hs) = translate_batch(models, &batch, max_len)?;
            Ok(Translation {
                tokens: outs.into_iter().next().unwrap(),
                h_final: hs.into_iter().next().unwrap(),
            })
        }
        DecodeMode::Beam(k) => {
            if k == 0 {
                return Err(Error::Contract("beam width must be positive".into()));
            }
            let tokens = beam_search(models, src, features, k, max_len)?;
            // final state: teacher-force the winning tokens on model 0
            let h_final = rerun_final_state(models[0], src, features, &tokens)?;
            Ok(Translation { tokens, h_final })
        }
    }
}

#[derive(Clone)]
struct Hypothesis {
    tokens: Vec<u32>,
    log_prob: f64,
    hidden: Vec<Value>, // one per model
    finished: bool,
}

impl Hypothesis {
    fn normalized(&self) -> f64 {
        let len = self.tokens.len().max(1) as f64;
        self.log_prob / len
    }
}

fn beam_search(
    models: &[&ModelQParams],
    src: &[u32],
    features: &[f64],
    k: usize,
    max_len: usize,
) -> Result<Vec<u32>> {
    let dims = models[0].dims;
    let mut rng = Rng::seed_from(0);
    let tape = Tape::inference();
    let (batch, t_src) = single_batch(src, features, dims.feat_dim)?;
    let features = tape.constant(batch.features.clone())?;
    let mut ctxs = Vec::with_capacity(models.len());
    for m in models {
        ctxs.push(setup(&tape, m, &batch.src, &batch.src_mask, 1, t_src, features, &mut rng)?);
    }

    let init_hidden: Vec<Value> = ctxs
        .iter()
        .map(|_| tape.constant(Tensor::zeros(vec![1, dims.dec_hidden])))
        .collect::<Result<_>>()?;
    let mut live = vec![Hypothesis {
        tokens: vec![],
        log_prob: 0.0,
        hidden: init_hidden,
        finished: false,
    }];
    let mut finished: Vec<Hypothesis> = Vec::new();

    for _ in 0..=max_len {
        if live.is_empty() {
            break;
        }
        let mut candidates: Vec<Hypothesis> = Vec::new();
        for hyp in &live {
            let prev = vec![*hyp.tokens.last().unwrap_or(&BOS)];
            let mut avg = vec![0.0; dims.tgt_vocab];
            let mut new_hidden = Vec::with_capacity(ctxs.len());
            for (mi, mctx) in ctxs.iter().enumerate() {
                let (p, h) = decode_step(
                    &tape, &mctx.taped, &mctx.ctx, &prev, hyp.hidden[mi], false, &mut rng,
                )?;
                let pt = tape.tensor(p);
                for (acc, &v) in avg.iter_mut().zip(pt.values()) {
                    *acc += v / models.len() as f64;
                }
                new_hidden.push(h);
            }
            // k best continuations of this hypothesis suffice
            let mut order: Vec<usize> = (0..dims.tgt_vocab).collect();
            order.sort_by(|&a, &b| avg[b].partial_cmp(&avg[a]).unwrap().then(a.cmp(&b)));
            for &tok in order.iter().take(k) {
                let lp = hyp.log_prob + avg[tok].max(1e-300).ln();
                let mut tokens = hyp.tokens.clone();
                let mut is_finished = false;
                if tok as u32 == EOS {
                    is_finished = true;
                } else {
                    tokens.push(tok as u32);
                }
                candidates.push(Hypothesis {
                    tokens,
                    log_prob: lp,
                    hidden: new_hidden.clone(),
                    finished: is_finished,
                });
            }
        }
        candidates.sort_by(|a, b| b.normalized().partial_cmp(&a.normalized()).unwrap());
        live = Vec::new();
        for c in candidates {
            if c.finished {
                finished.push(c);
            } else if live.len() < k {
                if c.tokens.len() >= max_len {
                    finished.push(c);
                } else {
                    live.push(c);
                }
            }
        }
    }
    finished.extend(live);
    finished.sort_by(|a, b| b.normalized().partial_cmp(&a.normalized()).unwrap());
    Ok(finished
        .into_iter()
        .next()
        .map(|h| h.tokens)
        .unwrap_or_default())
}

/// Teacher-force a token sequence and return the final decoder state,
/// mirroring the state selection of the training pass.
fn rerun_final_state(
    model: &ModelQParams,
    src: &[u32],
    features: &[f64],
    tokens: &[u32],
) -> Result<Vec<f64>> {
    let dims = model.dims;
    let mut rng = Rng::seed_from(0);
    let tape = Tape::inference();
    let (batch, t_src) = single_batch(src, features, dims.feat_dim)?;
    let features = tape.constant(batch.features.clone())?;
    let mctx = setup(&tape, model, &batch.src, &batch.src_mask, 1, t_src, features, &mut rng)?;
    let mut hidden = tape.constant(Tensor::zeros(vec![1, dims.dec_hidden]))?;
    let mut prev = BOS;
    for &tok in tokens.iter().chain(std::iter::once(&EOS)) {
        let (_, h) = decode_step(&tape, &mctx.taped, &mctx.ctx, &[prev], hidden, false, &mut rng)?;
        hidden = h;
        if tok == EOS {
            break;
        }
        prev = tok;
    }
    Ok(tape.tensor(hidden).values().to_vec())
}
