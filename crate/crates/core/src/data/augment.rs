use serde::{Deserialize, Serialize};

use crate::rng::SeededRng;

use super::synth::Sample;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AugmentationKind {
    /// Additive Gaussian noise (blur analog).
    Noise,
    /// Per-block multiplicative jitter (color-jitter analog).
    ScaleJitter,
    /// Swaps mirror coordinate pairs k ↔ D−1−k (flip analog).
    CoordinateFlip,
    /// Attenuates the last coordinate block (grayscale analog).
    ChannelDrop,
    /// Zeroes a contiguous window (random-crop analog).
    Mask,
}

impl AugmentationKind {
    pub const ALL: [AugmentationKind; 5] = [
        AugmentationKind::Noise,
        AugmentationKind::ScaleJitter,
        AugmentationKind::CoordinateFlip,
        AugmentationKind::ChannelDrop,
        AugmentationKind::Mask,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AugmentationKind::Noise => "noise",
            AugmentationKind::ScaleJitter => "scale-jitter",
            AugmentationKind::CoordinateFlip => "coordinate-flip",
            AugmentationKind::ChannelDrop => "channel-drop",
            AugmentationKind::Mask => "mask",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentationSpec {
    pub kind: AugmentationKind,
    /// In [0, 1]; 0 is the identity for every kind.
    pub severity: f64,
}

impl AugmentationSpec {
    pub fn new(kind: AugmentationKind, severity: f64) -> Self {
        Self { kind, severity: severity.clamp(0.0, 1.0) }
    }
}

/// How views are drawn for one sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ViewPolicy {
    pub standard_views: usize,
    /// Each augmentation kind is applied to a standard view with this probability.
    pub apply_probability: f64,
    pub standard_max_severity: f64,
    pub heavy_mask_min: f64,
    pub heavy_mask_max: f64,
    /// σ of the noise augmentation at severity 1.
    pub noise_scale: f64,
    /// Number of coordinate blocks for scale jitter and channel drop.
    pub blocks: usize,
}

impl Default for ViewPolicy {
    fn default() -> Self {
        Self {
            standard_views: 2,
            apply_probability: 0.5,
            standard_max_severity: 0.5,
            heavy_mask_min: 0.6,
            heavy_mask_max: 0.95,
            noise_scale: 0.2,
            blocks: 8,
        }
    }
}

impl ViewPolicy {
    pub fn validate(&self) -> crate::Result<()> {
        let ok = self.standard_views >= 1
            && (0.0..=1.0).contains(&self.apply_probability)
            && (0.0..=1.0).contains(&self.standard_max_severity)
            && 0.0 <= self.heavy_mask_min
            && self.heavy_mask_min <= self.heavy_mask_max
            && self.heavy_mask_max <= 1.0
            && self.noise_scale.is_finite()
            && self.noise_scale >= 0.0
            && self.blocks >= 1;
        if ok {
            Ok(())
        } else {
            Err(crate::Error::Config(format!("invalid view policy {self:?}")))
        }
    }
}

/// Fraction of coordinates a mask of this severity zeroes.
pub const MASK_MAX_FRACTION: f64 = 0.95;

fn block_range(dim: usize, blocks: usize, b: usize) -> std::ops::Range<usize> {
    let blocks = blocks.min(dim).max(1);
    (b * dim / blocks)..((b + 1) * dim / blocks)
}

/// Applies one augmentation to a feature vector.
pub fn augment(x: &[f64], spec: &AugmentationSpec, policy: &ViewPolicy, rng: &mut SeededRng) -> Vec<f64> {
    let mut out = x.to_vec();
    let s = spec.severity;
    if s <= 0.0 {
        return out;
    }
    let dim = out.len();
    match spec.kind {
        AugmentationKind::Noise => {
            let sigma = s * policy.noise_scale;
            out.iter_mut().for_each(|v| *v += sigma * rng.normal());
        }
        AugmentationKind::ScaleJitter => {
            let blocks = policy.blocks.min(dim).max(1);
            for b in 0..blocks {
                let f = rng.uniform_range(1.0 - s, 1.0 + s);
                out[block_range(dim, blocks, b)].iter_mut().for_each(|v| *v *= f);
            }
        }
        AugmentationKind::CoordinateFlip => {
            let pairs = dim / 2;
            let count = (s * pairs as f64).round() as usize;
            let mut order: Vec<usize> = (0..pairs).collect();
            rng.shuffle(&mut order);
            for &k in &order[..count] {
                out.swap(k, dim - 1 - k);
            }
        }
        AugmentationKind::ChannelDrop => {
            let blocks = policy.blocks.min(dim).max(1);
            out[block_range(dim, blocks, blocks - 1)].iter_mut().for_each(|v| *v *= 1.0 - s);
        }
        AugmentationKind::Mask => {
            let count = ((s * MASK_MAX_FRACTION * dim as f64).floor() as usize).min(dim);
            if count > 0 {
                let start = rng.below(dim - count + 1);
                out[start..start + count].iter_mut().for_each(|v| *v = 0.0);
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewSet {
    pub source_id: u64,
    pub views: Vec<Vec<f64>>,
    /// Augmentations applied to each view, in application order.
    pub specs: Vec<Vec<AugmentationSpec>>,
}

// Spatial-style transforms first, additive noise last.
const STANDARD_ORDER: [AugmentationKind; 5] = [
    AugmentationKind::Mask,
    AugmentationKind::CoordinateFlip,
    AugmentationKind::ScaleJitter,
    AugmentationKind::ChannelDrop,
    AugmentationKind::Noise,
];

fn apply_all(x: &[f64], specs: &[AugmentationSpec], policy: &ViewPolicy, rng: &mut SeededRng) -> Vec<f64> {
    specs.iter().fold(x.to_vec(), |v, spec| augment(&v, spec, policy, rng))
}

/// `policy.standard_views` lightly augmented views followed by heavy-mask
/// views up to `num_views`. View v uses sub-stream v of `rng`.
pub fn make_viewset(sample: &Sample, num_views: usize, policy: &ViewPolicy, rng: &SeededRng) -> ViewSet {
    let mut views = Vec::with_capacity(num_views);
    let mut specs = Vec::with_capacity(num_views);
    for v in 0..num_views {
        let mut r = rng.split(v as u64);
        let chosen: Vec<AugmentationSpec> = if v < policy.standard_views {
            STANDARD_ORDER
                .iter()
                .filter_map(|&kind| {
                    let apply = r.uniform() < policy.apply_probability;
                    let sev = r.uniform_range(0.0, policy.standard_max_severity);
                    apply.then(|| AugmentationSpec::new(kind, sev))
                })
                .collect()
        } else {
            let sev = r.uniform_range(policy.heavy_mask_min, policy.heavy_mask_max);
            vec![AugmentationSpec::new(AugmentationKind::Mask, sev)]
        };
        views.push(apply_all(&sample.features, &chosen, policy, &mut r));
        specs.push(chosen);
    }
    ViewSet { source_id: sample.id, views, specs }
}
