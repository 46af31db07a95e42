use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::autodiff::Tensor;
use crate::error::Result;
use crate::io_util::write_atomic;

/// Wall-clock time is deliberately absent so metric files are reproducible;
/// it goes to the log and the run manifest instead.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub steps: usize,
    /// Learning rate at the last step of the epoch.
    pub lr: f64,
    /// Mean of the per-step loss.
    pub train_loss: f64,
    /// Mean per-step Σ of pair mean cosines.
    pub similarity_sum: f64,
    /// Mean per-step Σ of pair log-normalizers (0 for non-probabilistic losses).
    pub log_normalizer_sum: f64,
    /// κ over the clean training split in eval mode.
    pub kappa: Option<KappaSummary>,
    /// Mean over latent dimensions of the per-dimension std (collapse monitor).
    pub feature_std: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaSummary {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

pub fn kappa_summary(kappa: &[f64]) -> KappaSummary {
    let n = kappa.len() as f64;
    let mean = kappa.iter().sum::<f64>() / n;
    let var = kappa.iter().map(|k| (k - mean).powi(2)).sum::<f64>() / n;
    KappaSummary {
        mean,
        std: var.sqrt(),
        min: kappa.iter().copied().fold(f64::INFINITY, f64::min),
        max: kappa.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    }
}

/// Mean over columns of the population std of each column.
pub fn feature_std(latents: &Tensor) -> f64 {
    let (n, d) = (latents.rows(), latents.cols());
    let mut total = 0.0;
    for c in 0..d {
        let mean = (0..n).map(|r| latents.row(r)[c]).sum::<f64>() / n as f64;
        let var = (0..n).map(|r| (latents.row(r)[c] - mean).powi(2)).sum::<f64>() / n as f64;
        total += var.sqrt();
    }
    total / d as f64
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |v| v.to_string())
}

/// Writes `metrics.csv` and `metrics.json` into `dir`.
pub fn write_metrics(dir: &Path, metrics: &[EpochMetrics]) -> Result<Vec<PathBuf>> {
    let mut csv = String::from(
        "epoch,steps,lr,train_loss,similarity_sum,log_normalizer_sum,kappa_mean,kappa_std,kappa_min,kappa_max,feature_std\n",
    );
    for m in metrics {
        let k = m.kappa;
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{},{}",
            m.epoch,
            m.steps,
            m.lr,
            m.train_loss,
            m.similarity_sum,
            m.log_normalizer_sum,
            opt(k.map(|k| k.mean)),
            opt(k.map(|k| k.std)),
            opt(k.map(|k| k.min)),
            opt(k.map(|k| k.max)),
            m.feature_std
        );
    }
    let csv_path = dir.join("metrics.csv");
    let json_path = dir.join("metrics.json");
    write_atomic(&csv_path, csv.as_bytes())?;
    write_atomic(&json_path, &serde_json::to_vec_pretty(metrics)?)?;
    Ok(vec![csv_path, json_path])
}
