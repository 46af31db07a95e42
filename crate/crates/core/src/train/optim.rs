use std::collections::{BTreeMap, BTreeSet};

use crate::autodiff::Tensor;
use crate::error::{Error, Result};

/// base_lr · ½(1 + cos(π·step/total)).
pub fn cosine_lr(step: usize, total_steps: usize, base_lr: f64) -> f64 {
    if total_steps == 0 {
        return base_lr;
    }
    let frac = step.min(total_steps) as f64 / total_steps as f64;
    base_lr * 0.5 * (1.0 + (std::f64::consts::PI * frac).cos())
}

/// v ← m·v + (g + wd·w); w ← w − lr·v.
#[derive(Debug, Clone, Default)]
pub struct SgdMomentum {
    pub momentum: f64,
    pub weight_decay: f64,
    /// Parameters exempt from weight decay.
    pub no_decay: BTreeSet<String>,
    velocity: BTreeMap<String, Vec<f64>>,
}

impl SgdMomentum {
    pub fn new(momentum: f64, weight_decay: f64) -> Self {
        Self { momentum, weight_decay, ..Self::default() }
    }

    pub fn exempt(mut self, name: impl Into<String>) -> Self {
        self.no_decay.insert(name.into());
        self
    }

    /// Parameters without a gradient entry are treated as having zero gradient.
    pub fn step(
        &mut self,
        params: &mut BTreeMap<String, Tensor>,
        grads: &BTreeMap<String, Tensor>,
        lr: f64,
    ) -> Result<()> {
        for (name, g) in grads {
            let p = params
                .get(name)
                .ok_or_else(|| Error::Config(format!("gradient for unknown parameter {name}")))?;
            if p.shape() != g.shape() {
                return Err(Error::shape("sgd_momentum_step", g.shape(), p.shape()));
            }
            if let Some(bad) = g.data().iter().find(|v| !v.is_finite()) {
                return Err(Error::numerical("sgd_momentum_step", format!("gradient of {name} contains {bad}")));
            }
        }
        for (name, p) in params.iter_mut() {
            let wd = if self.no_decay.contains(name) { 0.0 } else { self.weight_decay };
            let v = self.velocity.entry(name.clone()).or_insert_with(|| vec![0.0; p.len()]);
            let g = grads.get(name).map(Tensor::data);
            for (k, (w, vk)) in p.data_mut().iter_mut().zip(v.iter_mut()).enumerate() {
                let gk = g.map_or(0.0, |g| g[k]);
                *vk = self.momentum * *vk + (gk + wd * *w);
                *w -= lr * *vk;
            }
        }
        Ok(())
    }
}
