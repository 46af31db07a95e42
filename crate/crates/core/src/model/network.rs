use std::collections::BTreeMap;

use crate::autodiff::{softplus_value, Axis, BatchStats, Tape, Tensor, Var};
use crate::error::{Error, Result};
use crate::rng::SeededRng;

use super::config::{inverse_softplus, ModelConfig};

pub const BN_EPS: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.9;

pub const KAPPA_BIAS: &str = "predictor.kappa.bias";

/// Named trainable parameters plus non-trainable buffers (running statistics).
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterStore {
    pub params: BTreeMap<String, Tensor>,
    pub buffers: BTreeMap<String, Tensor>,
    pub init_seed: u64,
}

impl ParameterStore {
    pub fn param(&self, name: &str) -> Result<&Tensor> {
        self.params
            .get(name)
            .ok_or_else(|| Error::Config(format!("missing parameter {name}")))
    }

    fn buffer(&self, name: &str) -> Result<&Tensor> {
        self.buffers
            .get(name)
            .ok_or_else(|| Error::Config(format!("missing buffer {name}")))
    }

    pub fn num_parameters(&self) -> usize {
        self.params.values().map(Tensor::len).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Batch statistics; running statistics are collected for update.
    Train,
    /// Running statistics; per-sample outputs independent of the batch.
    Eval,
}

/// Parameters placed on a tape.
#[derive(Debug, Clone)]
pub struct Bound {
    vars: BTreeMap<String, Var>,
}

impl Bound {
    pub fn var(&self, name: &str) -> Result<Var> {
        self.vars
            .get(name)
            .copied()
            .ok_or_else(|| Error::Config(format!("parameter {name} not bound")))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Var)> {
        self.vars.iter()
    }

    pub fn from_map(vars: BTreeMap<String, Var>) -> Self {
        Self { vars }
    }
}

/// Batch statistics gathered during a training-mode forward pass.
#[derive(Debug, Default, Clone)]
pub struct StatsUpdates {
    entries: Vec<(String, BatchStats, usize)>,
}

/// Predictor output on a tape: unit-norm μ rows and, with a κ head, κ as [n×1].
#[derive(Debug, Clone, Copy)]
pub struct PredictionVars {
    pub mu: Var,
    pub kappa: Option<Var>,
}

/// Plain-value forward result in inference mode.
#[derive(Debug, Clone, PartialEq)]
pub struct Inference {
    pub latents: Tensor,
    pub mu: Tensor,
    pub kappa: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    config: ModelConfig,
    store: ParameterStore,
}

fn kaiming_uniform(rng: &mut SeededRng, fan_in: usize, fan_out: usize, gain_sq: f64) -> Tensor {
    let bound = (3.0 * gain_sq / fan_in as f64).sqrt();
    let data = (0..fan_in * fan_out)
        .map(|_| rng.uniform_range(-bound, bound))
        .collect();
    Tensor::matrix(fan_in, fan_out, data).expect("consistent dims")
}

// Nonzero output biases keep a fully inactive hidden row off the origin,
// where row normalization is undefined.
fn uniform_bias(rng: &mut SeededRng, fan_in: usize, width: usize) -> Tensor {
    let bound = 1.0 / (fan_in as f64).sqrt();
    Tensor::vector((0..width).map(|_| rng.uniform_range(-bound, bound)).collect())
}

impl Network {
    /// Kaiming-uniform weights for layers followed by relu, LeCun-uniform for
    /// output layers; zero hidden biases, U(±1/√fan_in) output biases and
    /// softplus⁻¹(kappa_init) for the κ head.
    pub fn init(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = SeededRng::new(seed).split_named("init");
        let mut params = BTreeMap::new();
        let mut buffers = BTreeMap::new();
        let enc = &config.encoder;
        let mut fan_in = enc.input_dim;
        for (i, &width) in enc.hidden_dims.iter().enumerate() {
            params.insert(format!("encoder.layer{i}.weight"), kaiming_uniform(&mut rng, fan_in, width, 2.0));
            params.insert(format!("encoder.layer{i}.bias"), Tensor::zeros(&[width]));
            if enc.use_batch_standardize {
                buffers.insert(format!("encoder.layer{i}.running_mean"), Tensor::zeros(&[width]));
                buffers.insert(format!("encoder.layer{i}.running_var"), Tensor::full(&[width], 1.0));
            }
            fan_in = width;
        }
        let d = enc.latent_dim;
        params.insert("encoder.out.weight".into(), kaiming_uniform(&mut rng, fan_in, d, 1.0));
        params.insert("encoder.out.bias".into(), uniform_bias(&mut rng, fan_in, d));
        if config.use_predictor {
            let h = config.predictor_hidden;
            params.insert("predictor.hidden.weight".into(), kaiming_uniform(&mut rng, d, h, 2.0));
            params.insert("predictor.hidden.bias".into(), Tensor::zeros(&[h]));
            if enc.use_batch_standardize {
                buffers.insert("predictor.hidden.running_mean".into(), Tensor::zeros(&[h]));
                buffers.insert("predictor.hidden.running_var".into(), Tensor::full(&[h], 1.0));
            }
            params.insert("predictor.mu.weight".into(), kaiming_uniform(&mut rng, h, d, 1.0));
            params.insert("predictor.mu.bias".into(), uniform_bias(&mut rng, h, d));
            if config.kappa_head {
                params.insert("predictor.kappa.weight".into(), kaiming_uniform(&mut rng, h, 1, 1.0));
                params.insert(KAPPA_BIAS.into(), Tensor::vector(vec![inverse_softplus(config.kappa_init)]));
            }
        }
        Ok(Self {
            config,
            store: ParameterStore {
                params,
                buffers,
                init_seed: seed,
            },
        })
    }

    pub fn from_parts(config: ModelConfig, store: ParameterStore) -> Result<Self> {
        config.validate()?;
        let reference = Network::init(config.clone(), store.init_seed)?;
        for (name, t) in reference.store.params.iter().chain(&reference.store.buffers) {
            let got = store
                .params
                .get(name)
                .or_else(|| store.buffers.get(name))
                .ok_or_else(|| Error::Config(format!("missing tensor {name}")))?;
            if got.shape() != t.shape() {
                return Err(Error::shape("Network::from_parts", t.shape(), got.shape()));
            }
        }
        if store.params.len() != reference.store.params.len()
            || store.buffers.len() != reference.store.buffers.len()
        {
            return Err(Error::Config("unexpected tensors in parameter store".into()));
        }
        Ok(Self { config, store })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn store(&self) -> &ParameterStore {
        &self.store
    }

    pub fn store_mut(&mut self) -> &mut ParameterStore {
        &mut self.store
    }

    pub fn latent_dim(&self) -> usize {
        self.config.encoder.latent_dim
    }

    pub fn has_kappa_head(&self) -> bool {
        self.config.use_predictor && self.config.kappa_head
    }

    /// Places parameters on `tape`, as trainable leaves or constants.
    pub fn bind(&self, tape: &mut Tape, trainable: bool) -> Bound {
        let vars = self
            .store
            .params
            .iter()
            .map(|(name, t)| {
                let v = if trainable {
                    tape.leaf(t.clone())
                } else {
                    tape.constant(t.clone())
                };
                (name.clone(), v)
            })
            .collect();
        Bound { vars }
    }

    fn linear(&self, tape: &mut Tape, bound: &Bound, x: Var, prefix: &str) -> Result<Var> {
        let w = bound.var(&format!("{prefix}.weight"))?;
        let b = bound.var(&format!("{prefix}.bias"))?;
        let h = tape.matmul(x, w)?;
        tape.add_row(h, b)
    }

    fn normalize_layer(
        &self,
        tape: &mut Tape,
        x: Var,
        prefix: &str,
        mode: Mode,
        updates: &mut StatsUpdates,
    ) -> Result<Var> {
        if !self.config.encoder.use_batch_standardize {
            return Ok(x);
        }
        match mode {
            Mode::Train => {
                let n = tape.value(x).rows();
                let (y, stats) = tape.batch_standardize(x, BN_EPS)?;
                updates.entries.push((prefix.to_string(), stats, n));
                Ok(y)
            }
            Mode::Eval => {
                let mean = self.store.buffer(&format!("{prefix}.running_mean"))?;
                let var = self.store.buffer(&format!("{prefix}.running_var"))?;
                tape.standardize_with(x, mean.data(), var.data(), BN_EPS)
            }
        }
    }

    /// f: (linear → standardize → relu) per hidden layer, final linear, then
    /// row-wise L2 normalization onto S^{d-1}.
    pub fn encode(
        &self,
        tape: &mut Tape,
        bound: &Bound,
        x: Var,
        mode: Mode,
        updates: &mut StatsUpdates,
    ) -> Result<Var> {
        let cols = tape.value(x).cols();
        if cols != self.config.encoder.input_dim || !tape.value(x).is_matrix() {
            return Err(Error::shape(
                "encode",
                tape.value(x).shape(),
                &[0, self.config.encoder.input_dim],
            ));
        }
        let mut h = x;
        for i in 0..self.config.encoder.hidden_dims.len() {
            let prefix = format!("encoder.layer{i}");
            h = self.linear(tape, bound, h, &prefix)?;
            h = self.normalize_layer(tape, h, &prefix, mode, updates)?;
            h = tape.relu(h);
        }
        let out = self.linear(tape, bound, h, "encoder.out")?;
        tape.l2_normalize_rows(out)
    }

    /// h: one hidden layer, then μ = normalize(first d outputs) and
    /// κ = clamp(softplus(last output), kappa_min, kappa_max).
    pub fn predict(
        &self,
        tape: &mut Tape,
        bound: &Bound,
        z: Var,
        mode: Mode,
        updates: &mut StatsUpdates,
    ) -> Result<PredictionVars> {
        let d = self.latent_dim();
        if tape.value(z).cols() != d {
            return Err(Error::shape("predict", tape.value(z).shape(), &[0, d]));
        }
        if !self.config.use_predictor {
            return Ok(PredictionVars { mu: z, kappa: None });
        }
        let h = self.linear(tape, bound, z, "predictor.hidden")?;
        let h = self.normalize_layer(tape, h, "predictor.hidden", mode, updates)?;
        let h = tape.relu(h);
        let mu_raw = self.linear(tape, bound, h, "predictor.mu")?;
        let mu = tape.l2_normalize_rows(mu_raw)?;
        let kappa = if self.config.kappa_head {
            let pre = self.linear(tape, bound, h, "predictor.kappa")?;
            let k = tape.softplus(pre);
            let k = tape.clamp_min(k, self.config.kappa_min);
            Some(tape.clamp_max(k, self.config.kappa_max))
        } else {
            None
        };
        Ok(PredictionVars { mu, kappa })
    }

    /// Folds collected batch statistics into the running buffers
    /// (momentum 0.9, unbiased variance).
    pub fn apply_stats(&mut self, updates: &StatsUpdates) -> Result<()> {
        for (prefix, stats, n) in &updates.entries {
            let correction = *n as f64 / (*n as f64 - 1.0);
            let mean_key = format!("{prefix}.running_mean");
            let var_key = format!("{prefix}.running_var");
            let rm = self
                .store
                .buffers
                .get_mut(&mean_key)
                .ok_or_else(|| Error::Config(format!("missing buffer {mean_key}")))?;
            for (r, b) in rm.data_mut().iter_mut().zip(&stats.mean) {
                *r = BN_MOMENTUM * *r + (1.0 - BN_MOMENTUM) * b;
            }
            let rv = self
                .store
                .buffers
                .get_mut(&var_key)
                .ok_or_else(|| Error::Config(format!("missing buffer {var_key}")))?;
            for (r, b) in rv.data_mut().iter_mut().zip(&stats.var) {
                *r = BN_MOMENTUM * *r + (1.0 - BN_MOMENTUM) * b * correction;
            }
        }
        Ok(())
    }

    /// Eval-mode encode + predict of a plain [n × input_dim] batch.
    pub fn infer(&self, x: &Tensor) -> Result<Inference> {
        let mut tape = Tape::new();
        let bound = self.bind(&mut tape, false);
        let xv = tape.constant(x.clone());
        let mut unused = StatsUpdates::default();
        let z = self.encode(&mut tape, &bound, xv, Mode::Eval, &mut unused)?;
        let pred = self.predict(&mut tape, &bound, z, Mode::Eval, &mut unused)?;
        Ok(Inference {
            latents: tape.value(z).clone(),
            mu: tape.value(pred.mu).clone(),
            kappa: pred.kappa.map(|k| tape.value(k).data().to_vec()),
        })
    }

    /// Eval-mode latents only.
    pub fn embed(&self, x: &Tensor) -> Result<Tensor> {
        let mut tape = Tape::new();
        let bound = self.bind(&mut tape, false);
        let xv = tape.constant(x.clone());
        let mut unused = StatsUpdates::default();
        let z = self.encode(&mut tape, &bound, xv, Mode::Eval, &mut unused)?;
        Ok(tape.value(z).clone())
    }
}

/// κ the freshly initialized head would output for a zero hidden activation.
pub fn initial_kappa(config: &ModelConfig) -> f64 {
    softplus_value(inverse_softplus(config.kappa_init))
}

/// Splits a [(a+b+…) × m] variable into consecutive row blocks of `sizes`.
pub fn split_rows(tape: &mut Tape, x: Var, sizes: &[usize]) -> Result<Vec<Var>> {
    let mut out = Vec::with_capacity(sizes.len());
    let mut start = 0;
    for &s in sizes {
        out.push(tape.slice(x, Axis::Rows, start, start + s)?);
        start += s;
    }
    Ok(out)
}
