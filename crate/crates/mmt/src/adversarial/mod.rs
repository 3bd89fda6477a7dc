//! Auxiliary visual-reconstruction objectives.
//!
//! Two adversarial variants sit on top of the translation model, both fed
//! by the decoder's final hidden state h_T:
//!
//! * feature-space critic ("g-wgan"): a conditional generator rebuilds the
//!   feature vector from Gaussian noise concatenated with h_T, and a
//!   three-layer relu critic scores real against generated features, with
//!   a gradient penalty pushing the critic's input-gradient norm toward 1
//!   on interpolated samples;
//! * latent critic ("q-waae"): the translation model itself acts as the
//!   encoder of an adversarial autoencoder — a linear critic separates
//!   h_T from Gaussian prior samples (same gradient penalty, applied to
//!   latent interpolations) while a one-layer generator regresses the
//!   features from h_T under a mean-squared error.
//!
//! A regression-only variant keeps just the reconstruction term, and
//! `none` disables the auxiliary loss entirely.

mod losses;
mod params;

pub use losses::{
    gradient_penalty, interpolate_rows, total_loss, waae_losses, wgan_generator_loss,
    wgan_losses, WaaeLossParts,
};
pub use params::{
    critic_waae, critic_wgan, generate_waae, generate_wgan, sample_normal, AdvParams, TapedWaae,
    TapedWgan, WaaeParams, WganParams,
};

use crate::error::{Error, Result};

/// Which auxiliary objective trains alongside the translation loss.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    None,
    /// Reconstruction (mean-squared error) only.
    RegressionOnly,
    /// Latent-space critic plus reconstruction.
    QWaae,
    /// Feature-space critic with a conditional noise generator.
    GWgan,
}

impl Variant {
    pub fn parse(s: &str) -> Result<Variant> {
        match s {
            "none" => Ok(Variant::None),
            "regression-only" => Ok(Variant::RegressionOnly),
            "q-waae" => Ok(Variant::QWaae),
            "g-wgan" => Ok(Variant::GWgan),
            other => Err(Error::Config(format!("unknown variant `{other}`"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Variant::None => "none",
            Variant::RegressionOnly => "regression-only",
            Variant::QWaae => "q-waae",
            Variant::GWgan => "g-wgan",
        }
    }
}

/// Coefficients of the auxiliary objective.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdvConfig {
    pub variant: Variant,
    /// Weight of the adversarial term in the generator/encoder update.
    pub lambda_a: f64,
    /// Weight of the reconstruction term.
    pub lambda_r: f64,
    /// Gradient-penalty coefficient.
    pub lambda_gp: f64,
    /// Critic updates per generator update (feature-space variant).
    pub lambda_critic: usize,
    /// Noise width concatenated to h_T in the feature-space generator.
    pub noise_dim: usize,
    /// Dropout on the feature-space generator input.
    pub gen_dropout: f64,
    /// Use the generator sign exactly as the feature-space update rule is
    /// printed (descending λ_a·D(v')) instead of the conventional
    /// direction (descending −λ_a·D(v')).
    pub paper_literal_signs: bool,
}

impl Default for AdvConfig {
    fn default() -> Self {
        AdvConfig {
            variant: Variant::None,
            lambda_a: 0.2,
            lambda_r: 0.2,
            lambda_gp: 10.0,
            lambda_critic: 5,
            noise_dim: 128,
            gen_dropout: 0.3,
            paper_literal_signs: false,
        }
    }
}

impl AdvConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lambda_gp < 0.0 {
            return Err(Error::Config("lambda_gp must be >= 0".into()));
        }
        if self.lambda_critic < 1 {
            return Err(Error::Config("lambda_critic must be >= 1".into()));
        }
        if self.variant == Variant::GWgan && self.noise_dim == 0 {
            return Err(Error::Config(
                "g-wgan needs a positive noise dimension".into(),
            ));
        }
        if self.lambda_a < 0.0 || self.lambda_r < 0.0 {
            return Err(Error::Config("lambda_a/lambda_r must be >= 0".into()));
        }
        if !(0.0..1.0).contains(&self.gen_dropout) {
            return Err(Error::Config("gen_dropout must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests;
