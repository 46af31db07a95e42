use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::autodiff::Tensor;
use crate::data::{augment, make_viewset, AugmentationKind, AugmentationSpec, Sample, ViewPolicy};
use crate::error::{Error, Result};
use crate::model::Network;
use crate::rng::SeededRng;

use super::stats::{compare_groups, GroupComparison, GroupStats};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleKappa {
    pub id: u64,
    pub label: usize,
    pub ambiguous: bool,
    /// Mean κ over the generated views.
    pub kappa: f64,
    /// κ of the un-augmented input (what the probe classifies).
    pub input_kappa: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KappaReport {
    pub views_per_sample: usize,
    pub samples: Vec<SampleKappa>,
    pub overall: GroupStats,
    pub by_class: Vec<GroupStats>,
    /// Ambiguous (a) vs clean (b).
    pub ambiguity: GroupComparison,
}

impl KappaReport {
    pub fn kappas(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.kappa).collect()
    }
}

fn require_kappa(network: &Network) -> Result<()> {
    if network.has_kappa_head() {
        Ok(())
    } else {
        Err(Error::domain("kappa_statistics", "checkpoint has no κ head (not a vi-simsiam model)"))
    }
}

fn predict_kappa(network: &Network, rows: Vec<Vec<f64>>) -> Result<Vec<f64>> {
    let inf = network.infer(&Tensor::from_rows(&rows)?)?;
    inf.kappa.ok_or_else(|| Error::domain("kappa_statistics", "network returned no κ"))
}

/// Mean eval-mode κ over `views` training-policy views per sample.
pub fn kappa_statistics(
    network: &Network,
    samples: &[Sample],
    views: usize,
    policy: &ViewPolicy,
    seed: u64,
) -> Result<KappaReport> {
    require_kappa(network)?;
    if samples.is_empty() || views == 0 {
        return Err(Error::domain("kappa_statistics", "need at least one sample and one view"));
    }
    let root = SeededRng::new(seed).split_named("kappa-views");
    let mut rows = Vec::with_capacity(samples.len() * views);
    for s in samples {
        rows.extend(make_viewset(s, views, policy, &root.split(s.id)).views);
    }
    let kappa = predict_kappa(network, rows)?;
    let input = predict_kappa(network, samples.iter().map(|s| s.features.clone()).collect())?;
    let per_sample: Vec<SampleKappa> = samples
        .iter()
        .zip(kappa.chunks(views))
        .zip(input)
        .map(|((s, k), input_kappa)| SampleKappa {
            id: s.id,
            label: s.label,
            ambiguous: s.ambiguous,
            kappa: k.iter().sum::<f64>() / views as f64,
            input_kappa,
        })
        .collect();
    let all: Vec<f64> = per_sample.iter().map(|s| s.kappa).collect();
    let mut classes: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for s in &per_sample {
        classes.entry(s.label).or_default().push(s.kappa);
    }
    let by_class = classes.iter().map(|(c, v)| GroupStats::new(format!("class-{c}"), v)).collect();
    let (amb, clean): (Vec<&SampleKappa>, Vec<&SampleKappa>) = per_sample.iter().partition(|s| s.ambiguous);
    let ambiguity = compare_groups(
        "ambiguous",
        &amb.iter().map(|s| s.kappa).collect::<Vec<_>>(),
        "clean",
        &clean.iter().map(|s| s.kappa).collect::<Vec<_>>(),
    );
    Ok(KappaReport {
        views_per_sample: views,
        samples: per_sample,
        overall: GroupStats::new("all", &all),
        by_class,
        ambiguity,
    })
}

/// κ of each sample under a single augmentation kind at severity U(0, 1),
/// plus the un-augmented "base" group and a "heavy-mask" group whose
/// severity follows the policy's heavy-view range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentationKappa {
    pub groups: Vec<GroupStats>,
    /// var(heavy-mask) / var(noise).
    pub mask_noise_variance_ratio: f64,
    pub mask_vs_noise: GroupComparison,
}

pub fn augmentation_kappa(
    network: &Network,
    samples: &[Sample],
    policy: &ViewPolicy,
    seed: u64,
) -> Result<AugmentationKappa> {
    require_kappa(network)?;
    let root = SeededRng::new(seed).split_named("augmentation-kappa");
    let base = predict_kappa(network, samples.iter().map(|s| s.features.clone()).collect())?;
    let mut groups = vec![GroupStats::new("base", &base)];
    let mut by_kind = BTreeMap::new();
    for (k, kind) in AugmentationKind::ALL.into_iter().enumerate() {
        let kind_root = root.split(k as u64);
        let rows = samples
            .iter()
            .map(|s| {
                let mut r = kind_root.split(s.id);
                let sev = r.uniform();
                augment(&s.features, &AugmentationSpec::new(kind, sev), policy, &mut r)
            })
            .collect();
        let kappa = predict_kappa(network, rows)?;
        groups.push(GroupStats::new(kind.as_str(), &kappa));
        by_kind.insert(kind, kappa);
    }
    let heavy_root = root.split_named("heavy-mask");
    let rows = samples
        .iter()
        .map(|s| {
            let mut r = heavy_root.split(s.id);
            let sev = r.uniform_range(policy.heavy_mask_min, policy.heavy_mask_max);
            augment(&s.features, &AugmentationSpec::new(AugmentationKind::Mask, sev), policy, &mut r)
        })
        .collect();
    let heavy = predict_kappa(network, rows)?;
    let heavy_stats = GroupStats::new("heavy-mask", &heavy);
    let noise = &by_kind[&AugmentationKind::Noise];
    let noise_var = groups.iter().find(|g| g.name == "noise").map_or(f64::NAN, |g| g.variance);
    let ratio = heavy_stats.variance / noise_var;
    groups.push(heavy_stats);
    Ok(AugmentationKappa {
        mask_noise_variance_ratio: ratio,
        mask_vs_noise: compare_groups("heavy-mask", &heavy, "noise", noise),
        groups,
    })
}
