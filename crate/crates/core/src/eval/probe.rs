use serde::{Deserialize, Serialize};

use crate::autodiff::Tensor;
use crate::data::{Dataset, Sample, Split};
use crate::error::{Error, Result};
use crate::model::Network;
use crate::rng::SeededRng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeConfig {
    pub epochs: usize,
    pub lr: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self { epochs: 200, lr: 0.1, momentum: 0.9, batch_size: 64, seed: 0 }
    }
}

impl ProbeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs < 1 || self.batch_size < 1 || !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(Error::Config(format!("invalid probe configuration {self:?}")));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config(format!("probe momentum must lie in [0, 1), got {}", self.momentum)));
        }
        Ok(())
    }
}

/// Frozen features and labels of one split.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSplit {
    pub features: Tensor,
    pub labels: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub top1: f64,
    /// Only reported with at least 10 classes.
    pub top5: Option<f64>,
    pub best_val_top1: f64,
    pub best_epoch: usize,
    /// Test-split correctness, in test-split order.
    pub correct: Vec<bool>,
    pub predictions: Vec<usize>,
}

/// Eval-mode encoder latents of `samples`.
pub fn extract_features(network: &Network, samples: &[Sample]) -> Result<FeatureSplit> {
    let rows: Vec<Vec<f64>> = samples.iter().map(|s| s.features.clone()).collect();
    let x = Tensor::from_rows(&rows)?;
    Ok(FeatureSplit { features: network.embed(&x)?, labels: samples.iter().map(|s| s.label).collect() })
}

struct Standardizer {
    mean: Vec<f64>,
    inv_std: Vec<f64>,
}

impl Standardizer {
    fn fit(x: &Tensor) -> Self {
        let (n, d) = (x.rows(), x.cols());
        let mut mean = vec![0.0; d];
        for r in 0..n {
            mean.iter_mut().zip(x.row(r)).for_each(|(m, v)| *m += v / n as f64);
        }
        let mut var = vec![0.0; d];
        for r in 0..n {
            var.iter_mut().zip(x.row(r)).zip(&mean).for_each(|((s, v), m)| *s += (v - m).powi(2) / n as f64);
        }
        let inv_std = var.iter().map(|v| if *v > 1e-24 { 1.0 / v.sqrt() } else { 1.0 }).collect();
        Self { mean, inv_std }
    }

    fn apply(&self, x: &Tensor) -> Vec<Vec<f64>> {
        (0..x.rows())
            .map(|r| {
                x.row(r).iter().zip(&self.mean).zip(&self.inv_std).map(|((v, m), s)| (v - m) * s).collect()
            })
            .collect()
    }
}

/// Softmax regression: weights [k × (d+1)], bias in the last column.
struct Linear {
    w: Vec<f64>,
    k: usize,
    d: usize,
}

impl Linear {
    fn logits(&self, x: &[f64], out: &mut [f64]) {
        for (c, o) in out.iter_mut().enumerate() {
            let row = &self.w[c * (self.d + 1)..(c + 1) * (self.d + 1)];
            *o = row[self.d] + row[..self.d].iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        }
    }

    /// Classes ordered by descending logit (ties by class id).
    fn ranking(&self, x: &[f64]) -> Vec<usize> {
        let mut z = vec![0.0; self.k];
        self.logits(x, &mut z);
        let mut idx: Vec<usize> = (0..self.k).collect();
        idx.sort_by(|&a, &b| z[b].total_cmp(&z[a]).then(a.cmp(&b)));
        idx
    }

    fn accuracy(&self, xs: &[Vec<f64>], ys: &[usize], top: usize) -> f64 {
        let hits = xs.iter().zip(ys).filter(|(x, y)| self.ranking(x)[..top].contains(y)).count();
        hits as f64 / xs.len().max(1) as f64
    }
}

fn check_split(name: &str, s: &FeatureSplit, dim: usize, k: usize) -> Result<()> {
    if s.features.rows() != s.labels.len() || s.features.cols() != dim {
        return Err(Error::shape("linear_probe", s.features.shape(), &[s.labels.len(), dim]));
    }
    if let Some(bad) = s.labels.iter().find(|&&y| y >= k) {
        return Err(Error::domain("linear_probe", format!("{name} label {bad} exceeds class count {k}")));
    }
    if s.labels.is_empty() {
        return Err(Error::domain("linear_probe", format!("{name} split is empty")));
    }
    Ok(())
}

/// Trains the probe on `train`, keeps the epoch with the best `val` top-1
/// (earliest on ties), and scores `test`.
pub fn linear_probe_features(
    train: &FeatureSplit,
    val: &FeatureSplit,
    test: &FeatureSplit,
    num_classes: usize,
    config: &ProbeConfig,
) -> Result<ProbeResult> {
    config.validate()?;
    if num_classes < 2 {
        return Err(Error::domain("linear_probe", "need at least 2 classes"));
    }
    let d = train.features.cols();
    check_split("train", train, d, num_classes)?;
    check_split("val", val, d, num_classes)?;
    check_split("test", test, d, num_classes)?;
    let scaler = Standardizer::fit(&train.features);
    let (xtr, xva, xte) = (scaler.apply(&train.features), scaler.apply(&val.features), scaler.apply(&test.features));
    let k = num_classes;
    let mut model = Linear { w: vec![0.0; k * (d + 1)], k, d };
    let mut velocity = vec![0.0; model.w.len()];
    let mut best = (model.accuracy(&xva, &val.labels, 1), 0, model.w.clone());
    let mut rng = SeededRng::new(config.seed).split_named("probe");
    let mut order: Vec<usize> = (0..xtr.len()).collect();
    let mut logits = vec![0.0; k];
    let mut grad = vec![0.0; model.w.len()];
    for epoch in 1..=config.epochs {
        rng.shuffle(&mut order);
        for batch in order.chunks(config.batch_size) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            for &i in batch {
                model.logits(&xtr[i], &mut logits);
                let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let z: f64 = logits.iter().map(|l| (l - max).exp()).sum();
                for c in 0..k {
                    let p = (logits[c] - max).exp() / z;
                    let delta = (p - (train.labels[i] == c) as u8 as f64) / batch.len() as f64;
                    let row = &mut grad[c * (d + 1)..(c + 1) * (d + 1)];
                    row[..d].iter_mut().zip(&xtr[i]).for_each(|(g, x)| *g += delta * x);
                    row[d] += delta;
                }
            }
            for ((w, v), g) in model.w.iter_mut().zip(velocity.iter_mut()).zip(&grad) {
                *v = config.momentum * *v + g;
                *w -= config.lr * *v;
            }
        }
        let acc = model.accuracy(&xva, &val.labels, 1);
        if acc > best.0 {
            best = (acc, epoch, model.w.clone());
        }
    }
    model.w = best.2;
    let predictions: Vec<usize> = xte.iter().map(|x| model.ranking(x)[0]).collect();
    let correct: Vec<bool> = predictions.iter().zip(&test.labels).map(|(p, y)| p == y).collect();
    let top1 = correct.iter().filter(|c| **c).count() as f64 / correct.len() as f64;
    let top5 = (k >= 10).then(|| model.accuracy(&xte, &test.labels, 5));
    Ok(ProbeResult { top1, top5, best_val_top1: best.0, best_epoch: best.1, correct, predictions })
}

/// Probe on eval-mode encoder features of the dataset's splits.
pub fn linear_probe(network: &Network, dataset: &Dataset, config: &ProbeConfig) -> Result<ProbeResult> {
    if network.config().encoder.input_dim != dataset.input_dim() {
        return Err(Error::Config(format!(
            "checkpoint input_dim {} does not match dataset dimension {}",
            network.config().encoder.input_dim,
            dataset.input_dim()
        )));
    }
    let f = |s| extract_features(network, dataset.split(s));
    linear_probe_features(&f(Split::Train)?, &f(Split::Val)?, &f(Split::Test)?, dataset.num_classes(), config)
}
