//! The attention-based multimodal translation model: a bidirectional GRU
//! encoder, a two-transition conditional GRU decoder with a multiplicative
//! visual gate on the attention context, and a bottleneck softmax output.

mod forward;
mod params;
mod translate;


pub use forward::{
    attend, decode_step, encode, forward_batch, prepare_attention, translation_loss,
    AttentionCtx, Encoded, ForwardPass, TapedModelQ,
};
pub use params::{GruParams, ModelDims, ModelQParams, Preset};
pub use translate::{translate, translate_batch, DecodeMode, Translation};
