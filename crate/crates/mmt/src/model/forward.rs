//! Differentiable forward passes of the translation model.

use crate::autodiff::{Tape, Tensor, Value};
use crate::data::{Batch, BOS, EOS, PAD};
use crate::error::{Error, Result};
use crate::model::params::{GruParams, ModelDims, ModelQParams};
use crate::rng::Rng;

/// Model weights registered on a tape.
pub struct TapedModelQ {
    pub dims: ModelDims,
    pub src_embed: Value,
    pub tgt_embed: Value,
    pub enc_fwd: TapedGru,
    pub enc_bwd: TapedGru,
    pub dec_gru1: TapedGru,
    pub dec_gru2: TapedGru,
    pub w_h: Value,
    pub w_s: Value,
    pub w_a: Value,
    pub w_feat: Value,
    pub w_c: Value,
    pub w_bot: Value,
    pub w_proj: Value,
    /// Dropout rates (embeddings/annotations, bottleneck); zeroed at
    /// inference.
    pub drop_embed: f64,
    pub drop_bottleneck: f64,
}

pub struct TapedGru {
    pub wx: Value,
    pub wh: Value,
    pub bias: Value,
    pub hidden: usize,
}

impl GruParams {
    pub(crate) fn leaf_onto(&self, tape: &Tape, trainable: bool) -> Result<TapedGru> {
        Ok(TapedGru {
            wx: tape.leaf(self.wx.clone(), trainable)?,
            wh: tape.leaf(self.wh.clone(), trainable)?,
            bias: tape.leaf(self.bias.clone(), trainable)?,
            hidden: self.hidden,
        })
    }
}

impl ModelQParams {
    /// Register every matrix as a tape leaf. Leaf order matches
    /// [`ModelQParams::fields`], so gradients can be read back by position.
    pub fn leaf_onto(&self, tape: &Tape, trainable: bool) -> Result<TapedModelQ> {
        Ok(TapedModelQ {
            dims: self.dims,
            src_embed: tape.leaf(self.src_embed.clone(), trainable)?,
            tgt_embed: tape.leaf(self.tgt_embed.clone(), trainable)?,
            enc_fwd: self.enc_fwd.leaf_onto(tape, trainable)?,
            enc_bwd: self.enc_bwd.leaf_onto(tape, trainable)?,
            dec_gru1: self.dec_gru1.leaf_onto(tape, trainable)?,
            dec_gru2: self.dec_gru2.leaf_onto(tape, trainable)?,
            w_h: tape.leaf(self.w_h.clone(), trainable)?,
            w_s: tape.leaf(self.w_s.clone(), trainable)?,
            w_a: tape.leaf(self.w_a.clone(), trainable)?,
            w_feat: tape.leaf(self.w_feat.clone(), trainable)?,
            w_c: tape.leaf(self.w_c.clone(), trainable)?,
            w_bot: tape.leaf(self.w_bot.clone(), trainable)?,
            w_proj: tape.leaf(self.w_proj.clone(), trainable)?,
            drop_embed: 0.3,
            drop_bottleneck: 0.5,
        })
    }

    /// Leaf handles in `fields()` order, for pairing with gradients.
    pub fn leaf_handles(taped: &TapedModelQ) -> Vec<Value> {
        vec![
            taped.src_embed,
            taped.tgt_embed,
            taped.enc_fwd.wx,
            taped.enc_fwd.wh,
            taped.enc_fwd.bias,
            taped.enc_bwd.wx,
            taped.enc_bwd.wh,
            taped.enc_bwd.bias,
            taped.dec_gru1.wx,
            taped.dec_gru1.wh,
            taped.dec_gru1.bias,
            taped.dec_gru2.wx,
            taped.dec_gru2.wh,
            taped.dec_gru2.bias,
            taped.w_h,
            taped.w_s,
            taped.w_a,
            taped.w_feat,
            taped.w_c,
            taped.w_bot,
            taped.w_proj,
        ]
    }
}

/// One GRU transition: sigmoid reset/update gates, tanh candidate,
/// convex state blend.
pub fn gru_step(tape: &Tape, gru: &TapedGru, x: Value, h: Value) -> Result<Value> {
    let hdim = gru.hidden;
    let gx = tape.affine(x, gru.wx, Some(gru.bias))?;
    let gh = tape.matmul(h, gru.wh)?;
    let r = tape.sigmoid(tape.add(
        tape.slice_cols(gx, 0, hdim)?,
        tape.slice_cols(gh, 0, hdim)?,
    )?)?;
    let z = tape.sigmoid(tape.add(
        tape.slice_cols(gx, hdim, hdim)?,
        tape.slice_cols(gh, hdim, hdim)?,
    )?)?;
    let candidate = tape.tanh(tape.add(
        tape.slice_cols(gx, 2 * hdim, hdim)?,
        tape.mul(r, tape.slice_cols(gh, 2 * hdim, hdim)?)?,
    )?)?;
    // h' = (1 − z)⊙h + z⊙n
    let keep = tape.add_scalar(tape.mul_scalar(z, -1.0)?, 1.0)?;
    tape.add(tape.mul(keep, h)?, tape.mul(z, candidate)?)
}

/// Encoder output: per-position annotations (forward and backward states
/// concatenated) plus the source mask as tape constants.
pub struct Encoded {
    /// T entries, each B×(2·enc_hidden).
    pub annotations: Vec<Value>,
    /// B×T constant, 1 on real tokens.
    pub mask: Value,
    /// Per-step B×1 constant mask columns.
    pub mask_cols: Vec<Value>,
    pub batch: usize,
    pub t_src: usize,
}

/// Run the bidirectional encoder over a padded id matrix.
///
/// PAD positions hold the previous state (the update is gated by the mask),
/// and the returned mask excludes them from attention later.
pub fn encode(
    tape: &Tape,
    model: &TapedModelQ,
    src: &[u32],
    src_mask: &[f64],
    batch: usize,
    t_src: usize,
    train: bool,
    rng: &mut Rng,
) -> Result<Encoded> {
    if batch == 0 || t_src == 0 {
        return Err(Error::Contract("encode: empty input".into()));
    }
    if src.len() != batch * t_src || src_mask.len() != batch * t_src {
        return Err(Error::Shape(format!(
            "encode: src buffer {} for {batch}×{t_src}",
            src.len()
        )));
    }
    let drop = if train { model.drop_embed } else { 0.0 };

    // per-step embeddings with the shared dropout rate
    let mut embeds = Vec::with_capacity(t_src);
    let mut mask_cols = Vec::with_capacity(t_src);
    for t in 0..t_src {
        let ids: Vec<u32> = (0..batch).map(|i| src[i * t_src + t]).collect();
        let e = tape.embed(model.src_embed, &ids)?;
        embeds.push(tape.dropout(e, drop, rng)?);
        let col: Vec<f64> = (0..batch).map(|i| src_mask[i * t_src + t]).collect();
        mask_cols.push(tape.constant(Tensor::from_vec(vec![batch, 1], col)?)?);
    }

    let gated = |tape: &Tape, h_new: Value, h_old: Value, m: Value| -> Result<Value> {
        // h = m⊙h_new + (1−m)⊙h_old, broadcast over columns
        let keep_new = tape.mul_broadcast_col(h_new, m)?;
        let inv = tape.add_scalar(tape.mul_scalar(m, -1.0)?, 1.0)?;
        let keep_old = tape.mul_broadcast_col(h_old, inv)?;
        tape.add(keep_new, keep_old)
    };

    let zeros = Tensor::zeros(vec![batch, model.dims.enc_hidden]);
    let mut fwd_states = Vec::with_capacity(t_src);
    let mut h = tape.constant(zeros.clone())?;
    for t in 0..t_src {
        let step = gru_step(tape, &model.enc_fwd, embeds[t], h)?;
        h = gated(tape, step, h, mask_cols[t])?;
        fwd_states.push(h);
    }
    let mut bwd_states = vec![None; t_src];
    let mut h = tape.constant(zeros)?;
    for t in (0..t_src).rev() {
        let step = gru_step(tape, &model.enc_bwd, embeds[t], h)?;
        h = gated(tape, step, h, mask_cols[t])?;
        bwd_states[t] = Some(h);
    }

    let mut annotations = Vec::with_capacity(t_src);
    for t in 0..t_src {
        let s = tape.concat_cols(&[fwd_states[t], bwd_states[t].unwrap()])?;
        annotations.push(tape.dropout(s, drop, rng)?);
    }

    let mask = tape.constant(Tensor::from_vec(vec![batch, t_src], src_mask.to_vec())?)?;

    Ok(Encoded {
        annotations,
        mask,
        mask_cols,
        batch,
        t_src,
    })
}

/// Quantities the attention block reuses across decoder steps.
pub struct AttentionCtx {
    /// W_s·s_t for every position.
    proj_annotations: Vec<Value>,
    /// tanh(W_feat·v): the visual gate, constant across steps.
    pub visual_gate: Value,
    mask: Value,
    annotations: Vec<Value>,
    t_src: usize,
}

/// Precompute the attention inputs for one batch: annotation projections
/// and the visual gate. `features` is the B×d feature tensor (zeroed rows
/// make the whole visual path vanish).
pub fn prepare_attention(
    tape: &Tape,
    model: &TapedModelQ,
    encoded: &Encoded,
    features: Value,
) -> Result<AttentionCtx> {
    let proj_annotations = encoded
        .annotations
        .iter()
        .map(|&s| tape.matmul(s, model.w_s))
        .collect::<Result<Vec<_>>>()?;
    let visual_gate = tape.tanh(tape.matmul(features, model.w_feat)?)?;
    Ok(AttentionCtx {
        proj_annotations,
        visual_gate,
        mask: encoded.mask,
        annotations: encoded.annotations.clone(),
        t_src: encoded.t_src,
    })
}

/// Attention: score annotations against the intermediate decoder state,
/// softmax over unmasked positions, gate the weighted context by the
/// visual gate and project into decoder space.
///
/// Returns the context vector and the attention weights (B×T).
pub fn attend(
    tape: &Tape,
    model: &TapedModelQ,
    ctx: &AttentionCtx,
    h_prime: Value,
) -> Result<(Value, Value)> {
    let query = tape.matmul(h_prime, model.w_h)?;
    let mut scores = Vec::with_capacity(ctx.t_src);
    for t in 0..ctx.t_src {
        let combined = tape.tanh(tape.add(query, ctx.proj_annotations[t])?)?;
        scores.push(tape.matmul(combined, model.w_a)?);
    }
    let score_mat = tape.concat_cols(&scores)?;
    let weights = tape.softmax_masked(score_mat, ctx.mask)?;
    let mut context = None;
    for t in 0..ctx.t_src {
        let w_col = tape.slice_cols(weights, t, 1)?;
        let contrib = tape.mul_broadcast_col(ctx.annotations[t], w_col)?;
        context = Some(match context {
            None => contrib,
            Some(acc) => tape.add(acc, contrib)?,
        });
    }
    let context = context.ok_or_else(|| Error::Contract("attend: no annotations".into()))?;
    let gated = tape.mul(context, ctx.visual_gate)?;
    let projected = tape.matmul(gated, model.w_c)?;
    Ok((projected, weights))
}

/// One decoder step: embed the previous token, advance the first GRU,
/// attend, advance the second GRU, and map through the bottleneck to a
/// probability row per batch element.
///
/// Returns (probabilities B×V, new hidden state B×H).
pub fn decode_step(
    tape: &Tape,
    model: &TapedModelQ,
    ctx: &AttentionCtx,
    prev_ids: &[u32],
    hidden: Value,
    train: bool,
    rng: &mut Rng,
) -> Result<(Value, Value)> {
    let emb = tape.embed(model.tgt_embed, prev_ids)?;
    let h_prime = gru_step(tape, &model.dec_gru1, emb, hidden)?;
    let (context, _) = attend(tape, model, ctx, h_prime)?;
    let h_new = gru_step(tape, &model.dec_gru2, context, h_prime)?;
    let bottleneck = tape.tanh(tape.matmul(h_new, model.w_bot)?)?;
    let bottleneck = tape.dropout(
        bottleneck,
        if train { model.drop_bottleneck } else { 0.0 },
        rng,
    )?;
    let logits = tape.matmul(bottleneck, model.w_proj)?;
    let probs = tape.softmax(logits)?;
    Ok((probs, h_new))
}

/// Summed negative log-likelihood of the gold tokens under the stepwise
/// distributions, with PAD positions excluded. Gold probabilities are
/// floored at 1e-12 (clamp events are counted on the tape).
pub fn translation_loss(
    tape: &Tape,
    stepwise_probs: &[Value],
    gold: &[Vec<u32>],
    loss_masks: &[Vec<f64>],
) -> Result<Value> {
    if stepwise_probs.len() != gold.len() || gold.len() != loss_masks.len() {
        return Err(Error::Contract(format!(
            "translation_loss: {} distributions, {} gold steps, {} masks",
            stepwise_probs.len(),
            gold.len(),
            loss_masks.len()
        )));
    }
    let mut total: Option<Value> = None;
    for ((&p, ids), mask) in stepwise_probs.iter().zip(gold).zip(loss_masks) {
        let picked = tape.gather_per_row(p, ids)?;
        let logp = tape.ln(picked, Some(1e-12))?;
        let mask_col = tape.constant(Tensor::from_vec(vec![ids.len(), 1], mask.clone())?)?;
        let masked = tape.mul(logp, mask_col)?;
        let step_sum = tape.sum_all(masked)?;
        total = Some(match total {
            None => step_sum,
            Some(acc) => tape.add(acc, step_sum)?,
        });
    }
    let total = total.ok_or_else(|| Error::Contract("translation_loss: no steps".into()))?;
    tape.mul_scalar(total, -1.0)
}

/// A full teacher-forced pass over one batch.
pub struct ForwardPass {
    /// Summed cross-entropy over non-PAD target positions (incl. EOS).
    pub loss: Value,
    /// B×dec_hidden: each row is the decoder state after its sentence's
    /// final real step.
    pub h_final: Value,
    /// Number of scored (non-PAD) target positions.
    pub target_tokens: usize,
    /// Per-step output distributions.
    pub stepwise_probs: Vec<Value>,
}

/// Encode, attend and teacher-force the decoder over a batch, producing
/// the translation loss and the final hidden states.
pub fn forward_batch(
    tape: &Tape,
    model: &TapedModelQ,
    batch: &Batch,
    features: Value,
    train: bool,
    rng: &mut Rng,
) -> Result<ForwardPass> {
    let b = batch.size;
    let encoded = encode(
        tape,
        model,
        &batch.src,
        &batch.src_mask,
        b,
        batch.t_src,
        train,
        rng,
    )?;
    let ctx = prepare_attention(tape, model, &encoded, features)?;

    let lens: Vec<usize> = (0..b).map(|i| batch.tgt_len(i)).collect();
    let t_dec = batch.t_tgt + 1; // one extra step to score the end token

    let mut hidden = tape.constant(Tensor::zeros(vec![b, model.dims.dec_hidden]))?;
    let mut h_final: Option<Value> = None;
    let mut probs = Vec::with_capacity(t_dec);
    let mut gold_steps = Vec::with_capacity(t_dec);
    let mut mask_steps = Vec::with_capacity(t_dec);
    let mut target_tokens = 0usize;

    for t in 0..t_dec {
        let prev: Vec<u32> = (0..b)
            .map(|i| {
                if t == 0 {
                    BOS
                } else if t - 1 < lens[i] {
                    batch.tgt[i * batch.t_tgt + t - 1]
                } else {
                    PAD
                }
            })
            .collect();
        let gold: Vec<u32> = (0..b)
            .map(|i| {
                if t < lens[i] {
                    batch.tgt[i * batch.t_tgt + t]
                } else if t == lens[i] {
                    EOS
                } else {
                    PAD
                }
            })
            .collect();
        let lmask: Vec<f64> = (0..b).map(|i| if t <= lens[i] { 1.0 } else { 0.0 }).collect();
        target_tokens += lmask.iter().filter(|&&m| m == 1.0).count();

        let (p, h) = decode_step(tape, model, &ctx, &prev, hidden, train, rng)?;
        hidden = h;
        probs.push(p);
        gold_steps.push(gold);
        mask_steps.push(lmask);

        // pick up the state of sentences whose end token is scored here
        let sel: Vec<f64> = (0..b).map(|i| if lens[i] == t { 1.0 } else { 0.0 }).collect();
        if sel.iter().any(|&s| s == 1.0) {
            let sel_col = tape.constant(Tensor::from_vec(vec![b, 1], sel)?)?;
            let picked = tape.mul_broadcast_col(hidden, sel_col)?;
            h_final = Some(match h_final {
                None => picked,
                Some(acc) => tape.add(acc, picked)?,
            });
        }
    }

    let loss = translation_loss(tape, &probs, &gold_steps, &mask_steps)?;
    let h_final =
        h_final.ok_or_else(|| Error::Contract("forward_batch: no sentence ends".into()))?;
    Ok(ForwardPass {
        loss,
        h_final,
        target_tokens,
        stepwise_probs: probs,
    })
}
