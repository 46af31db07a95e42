use serde::{Deserialize, Serialize};

use crate::data::ViewPolicy;
use crate::error::{Error, Result};
use crate::losses::{LossKind, LossOptions, Pairing};
use crate::model::ModelConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub loss: LossKind,
    pub epochs: usize,
    pub batch_size: usize,
    pub base_lr: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    /// Views per sample: `views.standard_views` standard plus heavy-mask views.
    pub num_views: usize,
    /// Fixed κ for the constant-κ vMF loss.
    pub vmf_kappa: f64,
    pub pairing: Pairing,
    pub loss_options: LossOptions,
    /// Save a checkpoint every this many epochs (0 disables periodic saves).
    pub checkpoint_every: usize,
    pub seed: u64,
    pub model: ModelConfig,
    pub views: ViewPolicy,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            loss: LossKind::ViSimsiam,
            epochs: 100,
            batch_size: 64,
            base_lr: 5e-3,
            momentum: 0.9,
            weight_decay: 1e-4,
            num_views: 8,
            vmf_kappa: 10.0,
            pairing: Pairing::AllToStandard,
            loss_options: LossOptions::default(),
            checkpoint_every: 10,
            seed: 0,
            model: ModelConfig::default(),
            views: ViewPolicy::default(),
        }
    }
}

impl TrainConfig {
    /// The model configuration actually trained: the κ head exists exactly
    /// when the loss needs it.
    pub fn resolved_model(&self) -> ModelConfig {
        ModelConfig { kappa_head: self.loss.uses_kappa_head(), ..self.model.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.epochs < 1 {
            return fail("epochs must be ≥ 1".into());
        }
        if self.batch_size < 2 {
            return fail(format!("batch_size must be ≥ 2 for batch statistics, got {}", self.batch_size));
        }
        if self.num_views < 2 {
            return fail(format!("num_views must be ≥ 2, got {}", self.num_views));
        }
        if self.views.standard_views > self.num_views {
            return fail(format!(
                "{} standard views exceed num_views = {}",
                self.views.standard_views, self.num_views
            ));
        }
        if !(self.base_lr.is_finite() && self.base_lr >= 0.0) {
            return fail(format!("base_lr must be finite and ≥ 0, got {}", self.base_lr));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return fail(format!("momentum must lie in [0, 1), got {}", self.momentum));
        }
        if !(self.weight_decay.is_finite() && self.weight_decay >= 0.0) {
            return fail(format!("weight_decay must be finite and ≥ 0, got {}", self.weight_decay));
        }
        if self.loss == LossKind::VmfConstKappa && !(self.vmf_kappa.is_finite() && self.vmf_kappa > 0.0) {
            return fail(format!("vmf_kappa must be positive, got {}", self.vmf_kappa));
        }
        if self.loss == LossKind::ViSimsiam && !self.model.use_predictor {
            return fail("vi-simsiam needs the predictor (it carries the κ head)".into());
        }
        self.views.validate()?;
        self.resolved_model().validate()
    }
}
