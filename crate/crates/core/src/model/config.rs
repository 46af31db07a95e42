use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncoderConfig {
    pub input_dim: usize,
    pub hidden_dims: Vec<usize>,
    pub latent_dim: usize,
    pub use_batch_standardize: bool,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            input_dim: 64,
            hidden_dims: vec![256, 256],
            latent_dim: 16,
            use_batch_standardize: true,
        }
    }
}

/// Encoder f (backbone + projector) and predictor h.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub encoder: EncoderConfig,
    pub predictor_hidden: usize,
    /// Identity predictor when false (stop-gradient ablations only).
    pub use_predictor: bool,
    /// Whether the predictor carries the concentration output.
    pub kappa_head: bool,
    /// κ at initialization: the κ-head bias starts at softplus⁻¹(kappa_init).
    pub kappa_init: f64,
    pub kappa_min: f64,
    pub kappa_max: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            encoder: EncoderConfig::default(),
            predictor_hidden: 64,
            use_predictor: true,
            kappa_head: true,
            kappa_init: 10.0,
            kappa_min: 1e-6,
            kappa_max: crate::distributions::KAPPA_MAX,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let e = &self.encoder;
        if e.latent_dim < 2 {
            return Err(Error::Config(format!(
                "latent_dim must be at least 2, got {}",
                e.latent_dim
            )));
        }
        if e.input_dim == 0 || e.hidden_dims.contains(&0) || self.predictor_hidden == 0 {
            return Err(Error::Config("all layer widths must be positive".into()));
        }
        if !(self.kappa_min > 0.0 && self.kappa_min < self.kappa_max) {
            return Err(Error::Config(format!(
                "kappa bounds must satisfy 0 < min < max, got [{}, {}]",
                self.kappa_min, self.kappa_max
            )));
        }
        if self.kappa_max > crate::distributions::KAPPA_MAX {
            return Err(Error::Config(format!(
                "kappa_max {} exceeds the supported {}",
                self.kappa_max,
                crate::distributions::KAPPA_MAX
            )));
        }
        if !(self.kappa_init > self.kappa_min && self.kappa_init < self.kappa_max) {
            return Err(Error::Config(format!(
                "kappa_init {} outside the clamp bounds",
                self.kappa_init
            )));
        }
        if self.kappa_head && !self.use_predictor {
            return Err(Error::Config(
                "the concentration head needs a predictor (use_predictor = true)".into(),
            ));
        }
        Ok(())
    }
}

/// softplus⁻¹(y) = ln(eʸ − 1).
pub fn inverse_softplus(y: f64) -> f64 {
    if y > 30.0 {
        y + (-(-y).exp()).ln_1p()
    } else {
        y.exp_m1().ln()
    }
}
