use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::autodiff::{Axis, Tape, Tensor, Var};
use crate::data::{make_viewset, Dataset, Sample, ViewPolicy};
use crate::error::{Error, Result};
use crate::losses::{compute_loss, LossOutput, ViewEmbeddings};
use crate::model::{split_rows, Checkpoint, Mode, Network, StatsUpdates, KAPPA_BIAS};
use crate::rng::SeededRng;

use super::config::TrainConfig;
use super::metrics::{feature_std, kappa_summary, write_metrics, EpochMetrics, KappaSummary};
use super::optim::{cosine_lr, SgdMomentum};

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub network: Network,
    pub metrics: Vec<EpochMetrics>,
    /// Epoch (1-based) with the lowest train loss.
    pub best_epoch: usize,
    pub wall_seconds: f64,
    /// Files written, in creation order (empty for in-memory runs).
    pub files: Vec<PathBuf>,
}

/// Stream for the views of `sample_id` in `epoch`.
pub fn view_rng(seed: u64, epoch: usize, sample_id: u64) -> SeededRng {
    SeededRng::new(seed).split_named("views").split(epoch as u64).split(sample_id)
}

/// One [n × D] tensor per view for a batch of samples.
pub fn batch_views(
    samples: &[&Sample],
    num_views: usize,
    policy: &ViewPolicy,
    rng_for: impl Fn(&Sample) -> SeededRng,
) -> Result<Vec<Tensor>> {
    let n = samples.len();
    let dim = samples.first().map_or(0, |s| s.features.len());
    let mut per_view: Vec<Vec<f64>> = (0..num_views).map(|_| Vec::with_capacity(n * dim)).collect();
    for s in samples {
        let vs = make_viewset(s, num_views, policy, &rng_for(s));
        for (buf, v) in per_view.iter_mut().zip(vs.views) {
            buf.extend(v);
        }
    }
    per_view.into_iter().map(|data| Tensor::matrix(n, dim, data)).collect()
}

struct StepResult {
    output: LossOutput,
    grads: BTreeMap<String, Tensor>,
    updates: StatsUpdates,
}

fn train_step(
    network: &Network,
    config: &TrainConfig,
    views: &[Tensor],
    sources: &[bool],
    targets: &[bool],
) -> Result<StepResult> {
    let mut tape = Tape::new();
    let bound = network.bind(&mut tape, true);
    let sizes: Vec<usize> = views.iter().map(Tensor::rows).collect();
    let inputs: Vec<Var> = views.iter().map(|v| tape.constant(v.clone())).collect();
    let x = tape.concat(&inputs, Axis::Rows)?;
    let mut updates = StatsUpdates::default();
    let z = network.encode(&mut tape, &bound, x, Mode::Train, &mut updates)?;
    let z_views = split_rows(&mut tape, z, &sizes)?;

    let src: Vec<usize> = (0..views.len()).filter(|&i| sources[i]).collect();
    let src_in = if src.len() == views.len() {
        z
    } else {
        let parts: Vec<Var> = src.iter().map(|&i| z_views[i]).collect();
        tape.concat(&parts, Axis::Rows)?
    };
    let pred = network.predict(&mut tape, &bound, src_in, Mode::Train, &mut updates)?;
    let src_sizes: Vec<usize> = src.iter().map(|&i| sizes[i]).collect();
    let mus = split_rows(&mut tape, pred.mu, &src_sizes)?;
    let kappas = match pred.kappa {
        Some(k) => split_rows(&mut tape, k, &src_sizes)?.into_iter().map(Some).collect(),
        None => vec![None; src.len()],
    };
    let mut mu = vec![None; views.len()];
    let mut kappa = vec![None; views.len()];
    for (slot, &i) in src.iter().enumerate() {
        mu[i] = Some(mus[slot]);
        kappa[i] = kappas[slot];
    }
    let e = ViewEmbeddings::new(z_views, mu, kappa).with_targets(targets.to_vec());
    let output = compute_loss(&mut tape, config.loss, &e, config.vmf_kappa, &config.loss_options)?;
    let mut g = tape.backward(output.loss)?;
    let grads = bound
        .iter()
        .filter_map(|(name, &v)| g.take(v).map(|t| (name.clone(), t)))
        .collect();
    Ok(StepResult { output, grads, updates })
}

fn eval_epoch(network: &Network, clean: &Tensor) -> Result<(Option<KappaSummary>, f64)> {
    let inf = network.infer(clean)?;
    Ok((inf.kappa.as_deref().map(kappa_summary), feature_std(&inf.latents)))
}

fn describe_kappa(k: Option<KappaSummary>) -> String {
    k.map_or("no κ head".into(), |k| {
        format!("κ mean {:.4} std {:.4} min {:.4} max {:.4}", k.mean, k.std, k.min, k.max)
    })
}

fn checkpoint_meta(config: &TrainConfig, dataset: &Dataset) -> serde_json::Value {
    serde_json::json!({ "train": config, "data": dataset.config })
}

/// Trains on `dataset.train`. With `out_dir`, metrics are rewritten after
/// every epoch and checkpoints saved under `out_dir/checkpoints`.
pub fn train_run(config: &TrainConfig, dataset: &Dataset, out_dir: Option<&Path>) -> Result<TrainOutcome> {
    config.validate()?;
    let model = config.resolved_model();
    if model.encoder.input_dim != dataset.input_dim() {
        return Err(Error::Config(format!(
            "model input_dim {} does not match dataset dimension {}",
            model.encoder.input_dim,
            dataset.input_dim()
        )));
    }
    let train = &dataset.train;
    if train.len() < 2 {
        return Err(Error::Config("training split needs at least 2 samples".into()));
    }
    let start = Instant::now();
    let mut network = Network::init(model, config.seed)?;
    let mut optimizer =
        SgdMomentum::new(config.momentum, config.weight_decay).exempt(KAPPA_BIAS);
    let sources = config.pairing.sources(config.views.standard_views, config.num_views);
    let targets = config.pairing.targets(config.views.standard_views, config.num_views);

    // Drop a trailing batch of one: batch statistics need two rows.
    let mut steps_per_epoch = train.len().div_ceil(config.batch_size);
    if train.len() % config.batch_size == 1 {
        steps_per_epoch -= 1;
    }
    let total_steps = steps_per_epoch * config.epochs;
    let clean = Tensor::from_rows(&train.iter().map(|s| s.features.clone()).collect::<Vec<_>>())?;
    let shuffle_root = SeededRng::new(config.seed).split_named("shuffle");
    let meta = checkpoint_meta(config, dataset);

    let mut files = Vec::new();
    let ckpt_dir = out_dir.map(|d| d.join("checkpoints"));
    let mut metrics: Vec<EpochMetrics> = Vec::with_capacity(config.epochs);
    let mut best: Option<(f64, usize)> = None;
    let mut last_kappa = eval_epoch(&network, &clean)?.0;
    let mut step = 0;

    for epoch in 1..=config.epochs {
        let mut order: Vec<usize> = (0..train.len()).collect();
        shuffle_root.split(epoch as u64).shuffle(&mut order);
        let (mut loss_sum, mut sim_sum, mut lc_sum) = (0.0, 0.0, 0.0);
        let mut lr = 0.0;
        for b in 0..steps_per_epoch {
            let idx = &order[b * config.batch_size..((b + 1) * config.batch_size).min(train.len())];
            let batch: Vec<&Sample> = idx.iter().map(|&i| &train[i]).collect();
            let views = batch_views(&batch, config.num_views, &config.views, |s| {
                view_rng(config.seed, epoch, s.id)
            })?;
            let diverged = |e: Error| match e {
                Error::Numerical { .. } | Error::Domain { .. } => Error::Diverged {
                    epoch,
                    step: step + 1,
                    reason: format!("{e}; last {}", describe_kappa(last_kappa)),
                },
                other => other,
            };
            let result = train_step(&network, config, &views, &sources, &targets).map_err(diverged)?;
            lr = cosine_lr(step, total_steps, config.base_lr);
            optimizer
                .step(&mut network.store_mut().params, &result.grads, lr)
                .map_err(diverged)?;
            network.apply_stats(&result.updates)?;
            loss_sum += result.output.total;
            sim_sum += result.output.similarity_sum();
            lc_sum += result.output.log_normalizer_sum;
            step += 1;
        }
        let steps = steps_per_epoch as f64;
        let (kappa, fstd) = eval_epoch(&network, &clean)?;
        last_kappa = kappa;
        let m = EpochMetrics {
            epoch,
            steps: steps_per_epoch,
            lr,
            train_loss: loss_sum / steps,
            similarity_sum: sim_sum / steps,
            log_normalizer_sum: lc_sum / steps,
            kappa,
            feature_std: fstd,
        };
        log::info!(
            "epoch {epoch}/{} loss {:.6} feature std {:.4} {}",
            config.epochs,
            m.train_loss,
            m.feature_std,
            describe_kappa(kappa)
        );
        let improved = best.is_none_or(|(l, _)| m.train_loss < l);
        if improved {
            best = Some((m.train_loss, epoch));
        }
        metrics.push(m);

        if let (Some(dir), Some(cdir)) = (out_dir, &ckpt_dir) {
            let written = write_metrics(dir, &metrics)?;
            if epoch == 1 {
                files.extend(written);
            }
            let save = |name: String, files: &mut Vec<PathBuf>| -> Result<()> {
                let path = cdir.join(name);
                Checkpoint::new(network.clone(), config.seed, epoch, meta.clone()).save(&path)?;
                if !files.contains(&path) {
                    files.push(path);
                }
                Ok(())
            };
            if config.checkpoint_every > 0 && epoch % config.checkpoint_every == 0 {
                save(format!("epoch-{epoch:04}.ckpt"), &mut files)?;
            }
            if improved {
                save("best.ckpt".into(), &mut files)?;
            }
            if epoch == config.epochs {
                save("final.ckpt".into(), &mut files)?;
            }
        }
    }
    let wall_seconds = start.elapsed().as_secs_f64();
    log::info!("training finished in {wall_seconds:.1} s");
    Ok(TrainOutcome {
        network,
        metrics,
        best_epoch: best.map_or(config.epochs, |(_, e)| e),
        wall_seconds,
        files,
    })
}
