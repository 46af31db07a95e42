use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SeededRng;
use crate::sphere::{dot, l2_norm, sample_uniform_sphere};

const MAX_PROTOTYPE_REJECTIONS: usize = 10_000;
const MAX_PROTOTYPE_COSINE: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub num_classes: usize,
    pub input_dim: usize,
    pub samples_per_class: usize,
    /// Fraction of each class generated as a mixture with another class.
    pub ambiguity_fraction: f64,
    /// Weight λ of the labelled prototype in a mixture.
    pub ambiguity_mix: f64,
    /// Per-coordinate Gaussian noise σ.
    pub noise_scale: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            num_classes: 10,
            input_dim: 64,
            samples_per_class: 100,
            ambiguity_fraction: 0.1,
            ambiguity_mix: 0.6,
            noise_scale: 0.175,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.num_classes < 2 {
            return fail(format!("num_classes must be ≥ 2, got {}", self.num_classes));
        }
        if self.input_dim < 2 {
            return fail(format!("input_dim must be ≥ 2, got {}", self.input_dim));
        }
        if self.samples_per_class < 10 {
            // 70/10/20 splits need at least one val and two test samples per class.
            return fail(format!("samples_per_class must be ≥ 10, got {}", self.samples_per_class));
        }
        if !(0.0..=1.0).contains(&self.ambiguity_fraction) {
            return fail(format!("ambiguity_fraction must lie in [0, 1], got {}", self.ambiguity_fraction));
        }
        if !(0.0..=1.0).contains(&self.ambiguity_mix) {
            return fail(format!("ambiguity_mix must lie in [0, 1], got {}", self.ambiguity_mix));
        }
        if self.ambiguous_per_class() > 0 && self.ambiguity_mix <= 0.5 {
            return fail(format!(
                "ambiguity_mix must exceed 0.5 so labels follow the dominant prototype, got {}",
                self.ambiguity_mix
            ));
        }
        if !(self.noise_scale.is_finite() && self.noise_scale >= 0.0) {
            return fail(format!("noise_scale must be finite and ≥ 0, got {}", self.noise_scale));
        }
        Ok(())
    }

    pub fn ambiguous_per_class(&self) -> usize {
        (self.ambiguity_fraction * self.samples_per_class as f64).floor() as usize
    }

    /// (train, val) counts per class; the remainder is test.
    pub fn split_counts(&self) -> (usize, usize) {
        let n = self.samples_per_class as f64;
        ((0.7 * n).round() as usize, (0.1 * n).round() as usize)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    /// Stable index within the whole dataset (class-major generation order).
    pub id: u64,
    pub features: Vec<f64>,
    pub label: usize,
    pub ambiguous: bool,
    pub mix_partner: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub config: SynthConfig,
    /// K unit vectors in input space.
    pub prototypes: Vec<Vec<f64>>,
    pub train: Vec<Sample>,
    pub val: Vec<Sample>,
    pub test: Vec<Sample>,
}

impl Dataset {
    pub fn split(&self, split: Split) -> &[Sample] {
        match split {
            Split::Train => &self.train,
            Split::Val => &self.val,
            Split::Test => &self.test,
        }
    }

    pub fn num_classes(&self) -> usize {
        self.config.num_classes
    }

    pub fn input_dim(&self) -> usize {
        self.config.input_dim
    }

    pub fn len(&self) -> usize {
        self.train.len() + self.val.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn draw_prototypes(config: &SynthConfig, rng: &mut SeededRng) -> Result<Vec<Vec<f64>>> {
    let mut protos: Vec<Vec<f64>> = Vec::with_capacity(config.num_classes);
    let mut rejections = 0;
    while protos.len() < config.num_classes {
        let cand = sample_uniform_sphere(config.input_dim, rng)?.into_inner();
        if protos.iter().all(|p| dot(p, &cand) < MAX_PROTOTYPE_COSINE) {
            protos.push(cand);
        } else {
            rejections += 1;
            if rejections >= MAX_PROTOTYPE_REJECTIONS {
                return Err(Error::Config(format!(
                    "could not place {} prototypes with pairwise cosine < {MAX_PROTOTYPE_COSINE} in \
                     dimension {} after {MAX_PROTOTYPE_REJECTIONS} rejections",
                    config.num_classes, config.input_dim
                )));
            }
        }
    }
    Ok(protos)
}

/// Generates all samples and splits them 70/10/20 within each class.
pub fn generate_dataset(config: &SynthConfig) -> Result<Dataset> {
    config.validate()?;
    let root = SeededRng::new(config.seed);
    let prototypes = draw_prototypes(config, &mut root.split_named("prototypes"))?;
    let sample_root = root.split_named("samples");
    let split_root = root.split_named("splits");
    let (k, spc, dim) = (config.num_classes, config.samples_per_class, config.input_dim);
    let n_ambiguous = config.ambiguous_per_class();
    let (n_train, n_val) = config.split_counts();
    let lambda = config.ambiguity_mix;

    let mut dataset = Dataset {
        config: config.clone(),
        prototypes,
        train: Vec::new(),
        val: Vec::new(),
        test: Vec::new(),
    };
    for class in 0..k {
        let mut samples = Vec::with_capacity(spc);
        for j in 0..spc {
            let id = (class * spc + j) as u64;
            let mut rng = sample_root.split(id);
            let (center, partner) = if j < n_ambiguous {
                let mut other = rng.below(k - 1);
                if other >= class {
                    other += 1;
                }
                let a = &dataset.prototypes[class];
                let b = &dataset.prototypes[other];
                let mut mix: Vec<f64> =
                    a.iter().zip(b).map(|(x, y)| lambda * x + (1.0 - lambda) * y).collect();
                let norm = l2_norm(&mix);
                mix.iter_mut().for_each(|v| *v /= norm);
                (mix, Some(other))
            } else {
                (dataset.prototypes[class].clone(), None)
            };
            let features: Vec<f64> = (0..dim)
                .map(|c| center[c] + config.noise_scale * rng.normal())
                .collect();
            samples.push(Sample {
                id,
                features,
                label: class,
                ambiguous: partner.is_some(),
                mix_partner: partner,
            });
        }
        let mut order: Vec<usize> = (0..spc).collect();
        split_root.split(class as u64).shuffle(&mut order);
        for (rank, idx) in order.into_iter().enumerate() {
            let s = samples[idx].clone();
            if rank < n_train {
                dataset.train.push(s);
            } else if rank < n_train + n_val {
                dataset.val.push(s);
            } else {
                dataset.test.push(s);
            }
        }
    }
    Ok(dataset)
}

/// Fraction of `samples` whose highest-cosine prototype is their label.
pub fn nearest_prototype_accuracy(prototypes: &[Vec<f64>], samples: &[Sample]) -> f64 {
    if samples.is_empty() {
        return f64::NAN;
    }
    let correct = samples
        .iter()
        .filter(|s| {
            let norm = l2_norm(&s.features);
            let best = prototypes
                .iter()
                .enumerate()
                .map(|(c, p)| (c, dot(p, &s.features) / norm))
                .fold((0, f64::NEG_INFINITY), |acc, (c, v)| if v > acc.1 { (c, v) } else { acc });
            best.0 == s.label
        })
        .count();
    correct as f64 / samples.len() as f64
}
