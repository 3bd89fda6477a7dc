//! Generator and critic weights for both adversarial variants.

use crate::autodiff::{Tape, Tensor, Value};
use crate::error::Result;
use crate::rng::Rng;

/// Latent-critic variant: one-layer tanh generator, linear critic on the
/// hidden state.
#[derive(Clone, Debug, PartialEq)]
pub struct WaaeParams {
    /// dec_hidden × feat_dim
    pub w_rec: Tensor,
    pub b_rec: Tensor,
    /// dec_hidden × 1
    pub w_adv: Tensor,
    pub b_adv: Tensor,
}

impl WaaeParams {
    pub fn init(dec_hidden: usize, feat_dim: usize, rng: &mut Rng) -> WaaeParams {
        WaaeParams {
            w_rec: Tensor::glorot(dec_hidden, feat_dim, rng),
            b_rec: Tensor::zeros(vec![1, feat_dim]),
            w_adv: Tensor::glorot(dec_hidden, 1, rng),
            b_adv: Tensor::zeros(vec![1, 1]),
        }
    }

    pub fn fields(&self) -> Vec<(&'static str, &Tensor)> {
        vec![
            ("w_rec", &self.w_rec),
            ("b_rec", &self.b_rec),
            ("w_adv", &self.w_adv),
            ("b_adv", &self.b_adv),
        ]
    }

    pub fn fields_mut(&mut self) -> Vec<(&'static str, &mut Tensor)> {
        vec![
            ("w_rec", &mut self.w_rec),
            ("b_rec", &mut self.b_rec),
            ("w_adv", &mut self.w_adv),
            ("b_adv", &mut self.b_adv),
        ]
    }

    /// Indices of generator fields within `fields()`.
    pub const GENERATOR_FIELDS: [usize; 2] = [0, 1];
    /// Indices of critic fields within `fields()`.
    pub const CRITIC_FIELDS: [usize; 2] = [2, 3];

    pub fn leaf_onto(
        &self,
        tape: &Tape,
        generator_trainable: bool,
        critic_trainable: bool,
    ) -> Result<TapedWaae> {
        Ok(TapedWaae {
            w_rec: tape.leaf(self.w_rec.clone(), generator_trainable)?,
            b_rec: tape.leaf(self.b_rec.clone(), generator_trainable)?,
            w_adv: tape.leaf(self.w_adv.clone(), critic_trainable)?,
            b_adv: tape.leaf(self.b_adv.clone(), critic_trainable)?,
        })
    }
}

pub struct TapedWaae {
    pub w_rec: Value,
    pub b_rec: Value,
    pub w_adv: Value,
    pub b_adv: Value,
}

impl TapedWaae {
    pub fn handles(&self) -> Vec<Value> {
        vec![self.w_rec, self.b_rec, self.w_adv, self.b_adv]
    }
}

/// Feature-critic variant: noise-conditioned tanh generator, three-layer
/// relu critic over [features, h_T].
#[derive(Clone, Debug, PartialEq)]
pub struct WganParams {
    /// (noise_dim + dec_hidden) × feat_dim
    pub w_rec: Tensor,
    pub b_rec: Tensor,
    /// (feat_dim + dec_hidden) × w1
    pub w_adv1: Tensor,
    pub b_adv1: Tensor,
    /// w1 × w2
    pub w_adv2: Tensor,
    pub b_adv2: Tensor,
    /// w2 × 1
    pub w_adv3: Tensor,
    pub b_adv3: Tensor,
    pub noise_dim: usize,
}

impl WganParams {
    /// Hidden widths follow the full-size ratios: first layer twice the
    /// decoder width, second layer the decoder width.
    pub fn init(dec_hidden: usize, feat_dim: usize, noise_dim: usize, rng: &mut Rng) -> WganParams {
        let w1 = 2 * dec_hidden;
        let w2 = dec_hidden;
        WganParams {
            w_rec: Tensor::glorot(noise_dim + dec_hidden, feat_dim, rng),
            b_rec: Tensor::zeros(vec![1, feat_dim]),
            w_adv1: Tensor::glorot(feat_dim + dec_hidden, w1, rng),
            b_adv1: Tensor::zeros(vec![1, w1]),
            w_adv2: Tensor::glorot(w1, w2, rng),
            b_adv2: Tensor::zeros(vec![1, w2]),
            w_adv3: Tensor::glorot(w2, 1, rng),
            b_adv3: Tensor::zeros(vec![1, 1]),
            noise_dim,
        }
    }

    pub fn fields(&self) -> Vec<(&'static str, &Tensor)> {
        vec![
            ("w_rec", &self.w_rec),
            ("b_rec", &self.b_rec),
            ("w_adv1", &self.w_adv1),
            ("b_adv1", &self.b_adv1),
            ("w_adv2", &self.w_adv2),
            ("b_adv2", &self.b_adv2),
            ("w_adv3", &self.w_adv3),
            ("b_adv3", &self.b_adv3),
        ]
    }

    pub fn fields_mut(&mut self) -> Vec<(&'static str, &mut Tensor)> {
        vec![
            ("w_rec", &mut self.w_rec),
            ("b_rec", &mut self.b_rec),
            ("w_adv1", &mut self.w_adv1),
            ("b_adv1", &mut self.b_adv1),
            ("w_adv2", &mut self.w_adv2),
            ("b_adv2", &mut self.b_adv2),
            ("w_adv3", &mut self.w_adv3),
            ("b_adv3", &mut self.b_adv3),
        ]
    }

    pub const GENERATOR_FIELDS: [usize; 2] = [0, 1];
    pub const CRITIC_FIELDS: [usize; 6] = [2, 3, 4, 5, 6, 7];

    pub fn leaf_onto(
        &self,
        tape: &Tape,
        generator_trainable: bool,
        critic_trainable: bool,
    ) -> Result<TapedWgan> {
        Ok(TapedWgan {
            w_rec: tape.leaf(self.w_rec.clone(), generator_trainable)?,
            b_rec: tape.leaf(self.b_rec.clone(), generator_trainable)?,
            w_adv1: tape.leaf(self.w_adv1.clone(), critic_trainable)?,
            b_adv1: tape.leaf(self.b_adv1.clone(), critic_trainable)?,
            w_adv2: tape.leaf(self.w_adv2.clone(), critic_trainable)?,
            b_adv2: tape.leaf(self.b_adv2.clone(), critic_trainable)?,
            w_adv3: tape.leaf(self.w_adv3.clone(), critic_trainable)?,
            b_adv3: tape.leaf(self.b_adv3.clone(), critic_trainable)?,
            noise_dim: self.noise_dim,
        })
    }
}

pub struct TapedWgan {
    pub w_rec: Value,
    pub b_rec: Value,
    pub w_adv1: Value,
    pub b_adv1: Value,
    pub w_adv2: Value,
    pub b_adv2: Value,
    pub w_adv3: Value,
    pub b_adv3: Value,
    pub noise_dim: usize,
}

impl TapedWgan {
    pub fn handles(&self) -> Vec<Value> {
        vec![
            self.w_rec, self.b_rec, self.w_adv1, self.b_adv1, self.w_adv2, self.b_adv2,
            self.w_adv3, self.b_adv3,
        ]
    }
}

/// Weight storage for whichever variant is active.
#[derive(Clone, Debug, PartialEq)]
pub enum AdvParams {
    None,
    Waae(WaaeParams),
    Wgan(WganParams),
}

impl AdvParams {
    pub fn fields(&self) -> Vec<(&'static str, &Tensor)> {
        match self {
            AdvParams::None => vec![],
            AdvParams::Waae(p) => p.fields(),
            AdvParams::Wgan(p) => p.fields(),
        }
    }

    pub fn fields_mut(&mut self) -> Vec<(&'static str, &mut Tensor)> {
        match self {
            AdvParams::None => vec![],
            AdvParams::Waae(p) => p.fields_mut(),
            AdvParams::Wgan(p) => p.fields_mut(),
        }
    }
}

/// v' = tanh(W_rec·h_T + b): reconstruct features from the latent state.
pub fn generate_waae(tape: &Tape, gen: &TapedWaae, h_t: Value) -> Result<Value> {
    tape.tanh(tape.affine(h_t, gen.w_rec, Some(gen.b_rec))?)
}

/// v' = tanh(W_rec·dropout([z, h_T]) + b): noise-conditioned reconstruction.
pub fn generate_wgan(
    tape: &Tape,
    gen: &TapedWgan,
    noise: Value,
    h_t: Value,
    dropout: f64,
    rng: &mut Rng,
) -> Result<Value> {
    let joint = tape.concat_cols(&[noise, h_t])?;
    let joint = tape.dropout(joint, dropout, rng)?;
    tape.tanh(tape.affine(joint, gen.w_rec, Some(gen.b_rec))?)
}

/// Linear latent critic: one score per row of h.
pub fn critic_waae(tape: &Tape, critic: &TapedWaae, h: Value) -> Result<Value> {
    tape.affine(h, critic.w_adv, Some(critic.b_adv))
}

/// Three-layer relu critic over concatenated [features, h_T].
pub fn critic_wgan(tape: &Tape, critic: &TapedWgan, v: Value, h_t: Value) -> Result<Value> {
    let joint = tape.concat_cols(&[v, h_t])?;
    let o1 = tape.relu(tape.affine(joint, critic.w_adv1, Some(critic.b_adv1))?)?;
    let o2 = tape.relu(tape.affine(o1, critic.w_adv2, Some(critic.b_adv2))?)?;
    tape.affine(o2, critic.w_adv3, Some(critic.b_adv3))
}

/// Sample a standard-normal tensor.
pub fn sample_normal(rows: usize, cols: usize, rng: &mut Rng) -> Tensor {
    Tensor::from_vec(
        vec![rows, cols],
        (0..rows * cols).map(|_| rng.normal()).collect(),
    )
    .expect("shape/values aligned by construction")
}
