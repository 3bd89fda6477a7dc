//! Model dimensions and weight storage.

use crate::autodiff::Tensor;
use crate::error::{Error, Result};
use crate::rng::Rng;

/// Named size preset for the model.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    /// Laptop-sized: embeddings 32, hidden 64, features 64.
    Desk,
    /// Full-sized: embeddings 256, hidden 512, features 2048.
    Paper,
}

impl Preset {
    pub fn parse(s: &str) -> Result<Preset> {
        match s {
            "desk" => Ok(Preset::Desk),
            "paper" => Ok(Preset::Paper),
            other => Err(Error::Config(format!("unknown preset `{other}`"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Preset::Desk => "desk",
            Preset::Paper => "paper",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModelDims {
    pub src_vocab: usize,
    pub tgt_vocab: usize,
    pub embed: usize,
    pub enc_hidden: usize,
    pub dec_hidden: usize,
    pub bottleneck: usize,
    pub feat_dim: usize,
}

impl ModelDims {
    pub fn from_preset(preset: Preset, src_vocab: usize, tgt_vocab: usize) -> ModelDims {
        match preset {
            Preset::Desk => ModelDims {
                src_vocab,
                tgt_vocab,
                embed: 32,
                enc_hidden: 64,
                dec_hidden: 64,
                bottleneck: 32,
                feat_dim: 64,
            },
            Preset::Paper => ModelDims {
                src_vocab,
                tgt_vocab,
                embed: 256,
                enc_hidden: 512,
                dec_hidden: 512,
                bottleneck: 256,
                feat_dim: 2048,
            },
        }
    }

    /// Annotation width: concatenated forward+backward encoder states.
    pub fn annotation(&self) -> usize {
        2 * self.enc_hidden
    }
}

/// One GRU cell: packed input/recurrent weights and a gate bias, with the
/// gates ordered [reset | update | candidate].
#[derive(Clone, Debug, PartialEq)]
pub struct GruParams {
    /// input×3H
    pub wx: Tensor,
    /// H×3H
    pub wh: Tensor,
    /// 1×3H
    pub bias: Tensor,
    pub hidden: usize,
}

impl GruParams {
    pub fn init(input: usize, hidden: usize, rng: &mut Rng) -> GruParams {
        GruParams {
            wx: Tensor::glorot(input, 3 * hidden, rng),
            wh: Tensor::glorot(hidden, 3 * hidden, rng),
            bias: Tensor::zeros(vec![1, 3 * hidden]),
            hidden,
        }
    }
}

/// Every weight matrix of the translation model. The attention and output
/// projections are bias-free, which keeps the zero feature vector an exact
/// annihilator of the visual path.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelQParams {
    pub dims: ModelDims,
    pub src_embed: Tensor,
    pub tgt_embed: Tensor,
    pub enc_fwd: GruParams,
    pub enc_bwd: GruParams,
    pub dec_gru1: GruParams,
    pub dec_gru2: GruParams,
    /// decoder state → annotation space
    pub w_h: Tensor,
    /// annotation → annotation space
    pub w_s: Tensor,
    /// combined attention vector → scalar score
    pub w_a: Tensor,
    /// feature vector → annotation-space gate
    pub w_feat: Tensor,
    /// gated context → decoder space
    pub w_c: Tensor,
    /// decoder state → bottleneck
    pub w_bot: Tensor,
    /// bottleneck → target vocabulary logits
    pub w_proj: Tensor,
}

impl ModelQParams {
    pub fn init(dims: ModelDims, rng: &mut Rng) -> ModelQParams {
        let a = dims.annotation();
        ModelQParams {
            dims,
            src_embed: Tensor::glorot(dims.src_vocab, dims.embed, rng),
            tgt_embed: Tensor::glorot(dims.tgt_vocab, dims.embed, rng),
            enc_fwd: GruParams::init(dims.embed, dims.enc_hidden, rng),
            enc_bwd: GruParams::init(dims.embed, dims.enc_hidden, rng),
            dec_gru1: GruParams::init(dims.embed, dims.dec_hidden, rng),
            dec_gru2: GruParams::init(dims.dec_hidden, dims.dec_hidden, rng),
            w_h: Tensor::glorot(dims.dec_hidden, a, rng),
            w_s: Tensor::glorot(a, a, rng),
            w_a: Tensor::glorot(a, 1, rng),
            w_feat: Tensor::glorot(dims.feat_dim, a, rng),
            w_c: Tensor::glorot(a, dims.dec_hidden, rng),
            w_bot: Tensor::glorot(dims.dec_hidden, dims.bottleneck, rng),
            w_proj: Tensor::glorot(dims.bottleneck, dims.tgt_vocab, rng),
        }
    }

    /// All weight matrices in a fixed order, for optimizers/serialization.
    pub fn fields(&self) -> Vec<(&'static str, &Tensor)> {
        vec![
            ("src_embed", &self.src_embed),
            ("tgt_embed", &self.tgt_embed),
            ("enc_fwd.wx", &self.enc_fwd.wx),
            ("enc_fwd.wh", &self.enc_fwd.wh),
            ("enc_fwd.bias", &self.enc_fwd.bias),
            ("enc_bwd.wx", &self.enc_bwd.wx),
            ("enc_bwd.wh", &self.enc_bwd.wh),
            ("enc_bwd.bias", &self.enc_bwd.bias),
            ("dec_gru1.wx", &self.dec_gru1.wx),
            ("dec_gru1.wh", &self.dec_gru1.wh),
            ("dec_gru1.bias", &self.dec_gru1.bias),
            ("dec_gru2.wx", &self.dec_gru2.wx),
            ("dec_gru2.wh", &self.dec_gru2.wh),
            ("dec_gru2.bias", &self.dec_gru2.bias),
            ("w_h", &self.w_h),
            ("w_s", &self.w_s),
            ("w_a", &self.w_a),
            ("w_feat", &self.w_feat),
            ("w_c", &self.w_c),
            ("w_bot", &self.w_bot),
            ("w_proj", &self.w_proj),
        ]
    }

    pub fn fields_mut(&mut self) -> Vec<(&'static str, &mut Tensor)> {
        vec![
            ("src_embed", &mut self.src_embed),
            ("tgt_embed", &mut self.tgt_embed),
            ("enc_fwd.wx", &mut self.enc_fwd.wx),
            ("enc_fwd.wh", &mut self.enc_fwd.wh),
            ("enc_fwd.bias", &mut self.enc_fwd.bias),
            ("enc_bwd.wx", &mut self.enc_bwd.wx),
            ("enc_bwd.wh", &mut self.enc_bwd.wh),
            ("enc_bwd.bias", &mut self.enc_bwd.bias),
            ("dec_gru1.wx", &mut self.dec_gru1.wx),
            ("dec_gru1.wh", &mut self.dec_gru1.wh),
            ("dec_gru1.bias", &mut self.dec_gru1.bias),
            ("dec_gru2.wx", &mut self.dec_gru2.wx),
            ("dec_gru2.wh", &mut self.dec_gru2.wh),
            ("dec_gru2.bias", &mut self.dec_gru2.bias),
            ("w_h", &mut self.w_h),
            ("w_s", &mut self.w_s),
            ("w_a", &mut self.w_a),
            ("w_feat", &mut self.w_feat),
            ("w_c", &mut self.w_c),
            ("w_bot", &mut self.w_bot),
            ("w_proj", &mut self.w_proj),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn annotation_width_is_twice_the_encoder() {
        let dims = ModelDims::from_preset(Preset::Paper, 100, 100);
        assert_eq!(dims.annotation(), 1024);
        assert_eq!(dims.feat_dim, 2048);
    }

    #[test]
    fn field_lists_are_aligned() {
        let dims = ModelDims::from_preset(Preset::Desk, 10, 12);
        let mut rng = Rng::seed_from(0);
        let mut p = ModelQParams::init(dims, &mut rng);
        let names: Vec<&str> = p.fields().iter().map(|(n, _)| *n).collect();
        let names_mut: Vec<&str> = p.fields_mut().iter().map(|(n, _)| *n).collect();
        assert_eq!(names, names_mut);
        assert_eq!(names.len(), 21);
    }

    #[test]
    fn projection_maps_bottleneck_to_vocab() {
        let dims = ModelDims::from_preset(Preset::Desk, 10, 37);
        let mut rng = Rng::seed_from(0);
        let p = ModelQParams::init(dims, &mut rng);
        assert_eq!(p.w_proj.shape(), &[32, 37]);
        assert_eq!(p.w_feat.shape(), &[64, 128]);
        assert_eq!(p.w_c.shape(), &[128, 64]);
    }
}
