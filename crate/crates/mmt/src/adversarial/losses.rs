//! Critic and generator objectives for both variants.

use crate::adversarial::params::{critic_waae, critic_wgan, TapedWaae, TapedWgan};
use crate::adversarial::AdvConfig;
use crate::autodiff::{Tape, Tensor, Value};
use crate::error::{Error, Result};
use crate::rng::Rng;

/// Per-row convex combination ε·real + (1−ε)·fake with one ε per row.
pub fn interpolate_rows(real: &Tensor, fake: &Tensor, eps: &[f64]) -> Result<Tensor> {
    if real.shape() != fake.shape() {
        return Err(Error::Shape(format!(
            "interpolate: {:?} vs {:?}",
            real.shape(),
            fake.shape()
        )));
    }
    let rows = real.rows();
    let cols = real.cols();
    if eps.len() != rows {
        return Err(Error::Shape(format!(
            "interpolate: {} eps values for {rows} rows",
            eps.len()
        )));
    }
    let mut out = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        let e = eps[i];
        for (r, f) in real.row(i).iter().zip(fake.row(i)) {
            out.push(e * r + (1.0 - e) * f);
        }
    }
    Tensor::from_vec(vec![rows, cols], out)
}

/// Gradient penalty: λ_gp · mean over rows of (‖∇_input critic(input)‖₂ − 1)²,
/// evaluated at per-row interpolations between `real` and `fake` rows.
///
/// The returned scalar stays differentiable with respect to the critic's
/// weights (the inner gradient is built as taped operations), which is the
/// whole point: the penalty trains the critic toward unit input-gradients.
pub fn gradient_penalty(
    tape: &Tape,
    critic: impl Fn(&Tape, Value) -> Result<Value>,
    real: &Tensor,
    fake: &Tensor,
    lambda_gp: f64,
    rng: &mut Rng,
) -> Result<Value> {
    let eps: Vec<f64> = (0..real.rows()).map(|_| rng.uniform()).collect();
    let mixed = interpolate_rows(real, fake, &eps)?;
    let probe = tape.leaf(mixed, true)?;
    let score = critic(tape, probe)?;
    let grad = tape.input_gradient(score, probe)?;
    let norms = tape.l2norm_rows(grad)?;
    let centered = tape.add_scalar(norms, -1.0)?;
    let squared = tape.mul(centered, centered)?;
    tape.mul_scalar(tape.mean_all(squared)?, lambda_gp)
}

/// Feature-space critic and generator objectives.
///
/// * critic loss (minimized): −(mean D(v) − mean D(v')) + gradient penalty;
/// * generator loss (minimized): −λ_a·mean D(v'), or +λ_a·mean D(v') when
///   the literal printed sign is requested.
pub fn wgan_losses(
    tape: &Tape,
    critic: &TapedWgan,
    v_real: Value,
    v_fake: Value,
    h_t: Value,
    cfg: &AdvConfig,
    rng: &mut Rng,
) -> Result<(Value, Value)> {
    let score_real = critic_wgan(tape, critic, v_real, h_t)?;
    let score_fake = critic_wgan(tape, critic, v_fake, h_t)?;
    let mean_real = tape.mean_all(score_real)?;
    let mean_fake = tape.mean_all(score_fake)?;

    let h_const = tape.constant(tape.tensor(h_t))?;
    let penalty = gradient_penalty(
        tape,
        |tape, probe| critic_wgan(tape, critic, probe, h_const),
        &tape.tensor(v_real),
        &tape.tensor(v_fake),
        cfg.lambda_gp,
        rng,
    )?;
    // minimize D(v') − D(v) + penalty
    let gap = tape.sub(mean_fake, mean_real)?;
    let critic_loss = tape.add(gap, penalty)?;

    let generator_loss = wgan_generator_loss(tape, mean_fake, cfg)?;
    Ok((critic_loss, generator_loss))
}

/// Generator side of the feature-space objective, from the critic's mean
/// score of the generated batch.
pub fn wgan_generator_loss(tape: &Tape, mean_fake: Value, cfg: &AdvConfig) -> Result<Value> {
    let sign = if cfg.paper_literal_signs { 1.0 } else { -1.0 };
    tape.mul_scalar(mean_fake, sign * cfg.lambda_a)
}

/// Both sides of the latent-critic objective.
pub struct WaaeLossParts {
    /// Minimized by the critic: −(mean σD(h') − mean σD(h_T)) + penalty.
    pub critic_loss: Value,
    /// Minimized by generator and translation model:
    /// λ_r·MSE(v, v') − λ_a·mean log σD(h_T).
    pub encoder_generator_loss: Value,
    /// The reconstruction term alone (λ_r·MSE), for logging.
    pub reconstruction: Value,
}

/// Latent-space critic and encoder/generator objectives. `h_prior` is a
/// standard-normal batch of the decoder width; the critic score is passed
/// through a sigmoid inside the difference and log terms, while the
/// gradient penalty probes the raw critic.
pub fn waae_losses(
    tape: &Tape,
    adv: &TapedWaae,
    h_t: Value,
    v_real: Value,
    v_fake: Value,
    h_prior: Value,
    cfg: &AdvConfig,
    rng: &mut Rng,
) -> Result<WaaeLossParts> {
    // critic side
    let sig_prior = tape.sigmoid(critic_waae(tape, adv, h_prior)?)?;
    let sig_latent = tape.sigmoid(critic_waae(tape, adv, h_t)?)?;
    let gap = tape.sub(tape.mean_all(sig_latent)?, tape.mean_all(sig_prior)?)?;
    let penalty = gradient_penalty(
        tape,
        |tape, probe| critic_waae(tape, adv, probe),
        &tape.tensor(h_t),
        &tape.tensor(h_prior),
        cfg.lambda_gp,
        rng,
    )?;
    let critic_loss = tape.add(gap, penalty)?;

    // encoder/generator side: squared reconstruction norm per example,
    // averaged over the batch (the elementwise mean times the feature
    // width), weighted by λ_r
    let feat_dim = tape.shape_of(v_real)[1] as f64;
    let mse = tape.mse(v_real, v_fake)?;
    let reconstruction = tape.mul_scalar(mse, cfg.lambda_r * feat_dim)?;
    let encoder_generator_loss = if cfg.lambda_a == 0.0 {
        // exactly the regression-only path
        reconstruction
    } else {
        let log_latent = tape.ln(sig_latent, Some(1e-12))?;
        let adv_term = tape.mul_scalar(tape.mean_all(log_latent)?, -cfg.lambda_a)?;
        tape.add(reconstruction, adv_term)?
    };
    Ok(WaaeLossParts {
        critic_loss,
        encoder_generator_loss,
        reconstruction,
    })
}

/// Total objective: translation loss plus the (already-weighted) auxiliary
/// term when one is present.
pub fn total_loss(tape: &Tape, translation: Value, aux: Option<Value>) -> Result<Value> {
    match aux {
        Some(a) => tape.add(translation, a),
        None => Ok(translation),
    }
}
