//! Desk-scale multimodal machine translation with adversarial
//! visual-feature reconstruction.
//!
//! The toolkit trains an attention-based GRU encoder-decoder that translates
//! a sentence while looking at an image feature vector, and optionally adds
//! an auxiliary objective that reconstructs those features from the
//! decoder's final hidden state — either as a plain regression, as a
//! Wasserstein GAN with gradient penalty over the feature space, or as a
//! Wasserstein adversarial autoencoder over the latent state. A synthetic
//! grounded-translation corpus makes the grounding effect measurable on a
//! laptop CPU: some source tokens are ambiguous, and only the feature
//! vector determines their correct translation.
//!
//! Everything runs on a self-contained f64 reverse-mode autodiff engine
//! with second-order support for the gradient-penalty terms. See the
//! `examples/` directory for runnable entry points into each capability,
//! and the `mmt` binary for the file-based workflow.

pub mod autodiff;
pub mod adversarial;
pub mod cli;
pub mod config;
pub mod data;
pub mod model;
pub mod check;
pub mod error;
pub mod eval;
pub mod rng;
pub mod train;

pub use autodiff::{clip_gradient_norm, Gradients, Tape, Tensor, Value};
pub use error::{Error, Result};
pub use rng::Rng;
