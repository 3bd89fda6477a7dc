//! Reverse-mode automatic differentiation on dense f64 tensors.
//!
//! A [`Tape`] records every operation executed on it; [`Tape::backward`]
//! replays the record in reverse to accumulate gradients into the leaves.
//! For the gradient-penalty style objectives, [`Tape::input_gradient`]
//! re-expresses a backward pass as new taped operations, so the resulting
//! gradient tensor can itself be differentiated once more.

mod backward;
mod second;
mod tape;
mod tensor;


pub use backward::{clip_gradient_norm, Gradients};
pub use tape::{Tape, Value};
pub use tensor::Tensor;
