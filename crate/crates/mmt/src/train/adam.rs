//! Adam optimizer with bias correction.

use crate::autodiff::Tensor;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamHyper {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamHyper {
    /// Settings shared by the translation model and the generator.
    pub fn model(lr: f64) -> AdamHyper {
        AdamHyper {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    /// Critic settings: lower rate, faster-moving moments.
    pub fn critic(lr: f64) -> AdamHyper {
        AdamHyper {
            lr,
            beta1: 0.5,
            beta2: 0.9,
            eps: 1e-8,
        }
    }
}

/// Per-parameter first/second moment buffers plus the step counter.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub hyper: AdamHyper,
    pub step: u64,
    pub moments: Vec<(Tensor, Tensor)>,
}

impl AdamState {
    pub fn new(hyper: AdamHyper, shapes: &[&Tensor]) -> AdamState {
        AdamState {
            hyper,
            step: 0,
            moments: shapes
                .iter()
                .map(|t| {
                    (
                        Tensor::zeros(t.shape().to_vec()),
                        Tensor::zeros(t.shape().to_vec()),
                    )
                })
                .collect(),
        }
    }
}

/// One bias-corrected update over a parameter group. `grads[i]` pairs with
/// `params[i]` and `state.moments[i]`.
pub fn adam_step(
    params: &mut [(&'static str, &mut Tensor)],
    grads: &[Tensor],
    state: &mut AdamState,
) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.moments.len() {
        return Err(Error::Contract(format!(
            "adam_step: {} params, {} grads, {} moment slots",
            params.len(),
            grads.len(),
            state.moments.len()
        )));
    }
    state.step += 1;
    let t = state.step as i32;
    let h = state.hyper;
    let corr1 = 1.0 - h.beta1.powi(t);
    let corr2 = 1.0 - h.beta2.powi(t);
    for ((name, p), (g, (m, v))) in params
        .iter_mut()
        .zip(grads.iter().zip(state.moments.iter_mut()))
    {
        if p.shape() != g.shape() {
            return Err(Error::Shape(format!(
                "adam_step: parameter {name} {:?} vs gradient {:?}",
                p.shape(),
                g.shape()
            )));
        }
        for i in 0..p.len() {
            let gi = g.values()[i];
            let mi = h.beta1 * m.values()[i] + (1.0 - h.beta1) * gi;
            let vi = h.beta2 * v.values()[i] + (1.0 - h.beta2) * gi * gi;
            m.values_mut()[i] = mi;
            v.values_mut()[i] = vi;
            let m_hat = mi / corr1;
            let v_hat = vi / corr2;
            p.values_mut()[i] -= h.lr * m_hat / (v_hat.sqrt() + h.eps);
        }
    }
    Ok(())
}
