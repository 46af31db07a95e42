use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::data::{generate_dataset, load_dataset, save_dataset, Dataset, SynthConfig};
use crate::error::Error;
use crate::eval::{linear_probe, run_analysis, write_analysis, write_loss_surface_csv, AnalysisConfig, ProbeConfig};
use crate::eval::loss_surface_grid;
use crate::io_util::write_atomic;
use crate::model::{Checkpoint, Network};
use crate::train::{train_run, TrainConfig};

use super::config::{
    layer, AnalyzeCommandConfig, DataSource, LossSurfaceConfig, Overrides, ProbeCommandConfig, TrainCommandConfig,
};
use super::CliError;

pub const COMMANDS: [&str; 5] = ["gen-data", "train", "probe", "analyze", "loss-surface"];

/// A command with its resolved configuration and loaded inputs, ready to run.
pub struct Prepared {
    pub command: &'static str,
    pub resolved: Value,
    pub seed: u64,
    job: Job,
}

enum Job {
    GenData(SynthConfig),
    Train(TrainConfig, Dataset),
    Probe(ProbeConfig, Network, Dataset),
    Analyze(AnalysisConfig, Network, Dataset),
    LossSurface(LossSurfaceConfig),
}

/// Configuration problems found before anything runs are usage errors.
fn usage(e: Error) -> CliError {
    match e {
        Error::Config(m) => CliError::Usage(format!("invalid configuration: {m}")),
        other => CliError::Runtime(other),
    }
}

fn to_value(v: &impl Serialize) -> Value {
    serde_json::to_value(v).expect("configs serialize")
}

fn load_data(source: &mut DataSource, fallback: Option<SynthConfig>) -> Result<Dataset, CliError> {
    if let Some(dir) = &source.dir {
        if source.synth.is_some() {
            return Err(CliError::Usage("data.dir and data.synth are mutually exclusive".into()));
        }
        return load_dataset(dir).map_err(usage);
    }
    let synth = source.synth.get_or_insert_with(|| fallback.unwrap_or_default());
    generate_dataset(synth).map_err(usage)
}

fn load_checkpoint(path: Option<&Path>) -> Result<(Checkpoint, Option<SynthConfig>), CliError> {
    let path = path.ok_or_else(|| CliError::Usage("a checkpoint is required (--checkpoint or `checkpoint` in the config)".into()))?;
    let ckpt = Checkpoint::load(path).map_err(CliError::Runtime)?;
    let synth = ckpt.header.meta.get("data").and_then(|d| serde_json::from_value(d.clone()).ok());
    Ok((ckpt, synth))
}

fn check_dims(network: &Network, dataset: &Dataset) -> Result<(), CliError> {
    let want = network.config().encoder.input_dim;
    if want != dataset.input_dim() {
        return Err(CliError::Usage(format!(
            "checkpoint expects input dimension {want}, dataset has {}",
            dataset.input_dim()
        )));
    }
    Ok(())
}

/// Resolves the configuration of `command` and loads its inputs.
pub fn prepare(
    command: &str,
    file: Option<Value>,
    flags: Overrides,
    seed_flag: Option<u64>,
) -> Result<Prepared, CliError> {
    let (command, resolved, seed, job) = match command {
        "gen-data" => {
            let c: SynthConfig = layer(file, flags)?;
            c.validate().map_err(usage)?;
            ("gen-data", to_value(&c), c.seed, Job::GenData(c))
        }
        "train" => {
            let mut c: TrainCommandConfig = layer(file, flags)?;
            c.train.validate().map_err(usage)?;
            let dataset = load_data(&mut c.data, None)?;
            let model_dim = c.train.model.encoder.input_dim;
            if model_dim != dataset.input_dim() {
                return Err(CliError::Usage(format!(
                    "train.model.encoder.input_dim is {model_dim} but the dataset has dimension {}",
                    dataset.input_dim()
                )));
            }
            ("train", to_value(&c), c.train.seed, Job::Train(c.train, dataset))
        }
        "probe" => {
            let mut c: ProbeCommandConfig = layer(file, flags)?;
            c.probe.validate().map_err(usage)?;
            let (ckpt, synth) = load_checkpoint(c.checkpoint.as_deref())?;
            let dataset = load_data(&mut c.data, synth)?;
            check_dims(&ckpt.network, &dataset)?;
            ("probe", to_value(&c), c.probe.seed, Job::Probe(c.probe, ckpt.network, dataset))
        }
        "analyze" => {
            let mut c: AnalyzeCommandConfig = layer(file, flags)?;
            c.analysis.probe.validate().map_err(usage)?;
            c.analysis.views.validate().map_err(usage)?;
            let (ckpt, synth) = load_checkpoint(c.checkpoint.as_deref())?;
            let dataset = load_data(&mut c.data, synth)?;
            check_dims(&ckpt.network, &dataset)?;
            ("analyze", to_value(&c), c.analysis.seed, Job::Analyze(c.analysis, ckpt.network, dataset))
        }
        "loss-surface" => {
            let c: LossSurfaceConfig = layer(file, flags)?;
            if c.s_steps < 1 || c.dim < 2 || !(c.s_min <= c.s_max) {
                return Err(CliError::Usage(format!("invalid loss-surface configuration {c:?}")));
            }
            ("loss-surface", to_value(&c), seed_flag.unwrap_or(0), Job::LossSurface(c))
        }
        other => return Err(CliError::Usage(format!("unknown command `{other}`"))),
    };
    Ok(Prepared { command, resolved, seed, job })
}

#[derive(Serialize)]
struct ProbeSummary {
    top1: f64,
    top5: Option<f64>,
    best_val_top1: f64,
    best_epoch: usize,
    test_samples: usize,
}

impl Prepared {
    /// Runs the job, writing outputs into `dir`; returns the files written.
    pub fn execute(self, dir: &Path) -> crate::Result<Vec<PathBuf>> {
        match self.job {
            Job::GenData(c) => {
                let dataset = generate_dataset(&c)?;
                save_dataset(dir, &dataset)
            }
            Job::Train(c, dataset) => Ok(train_run(&c, &dataset, Some(dir))?.files),
            Job::Probe(c, network, dataset) => {
                let r = linear_probe(&network, &dataset, &c)?;
                let summary = ProbeSummary {
                    top1: r.top1,
                    top5: r.top5,
                    best_val_top1: r.best_val_top1,
                    best_epoch: r.best_epoch,
                    test_samples: r.correct.len(),
                };
                let json = dir.join("probe.json");
                let mut bytes = serde_json::to_vec_pretty(&summary)?;
                bytes.push(b'\n');
                write_atomic(&json, &bytes)?;
                let mut csv = String::from("id,label,prediction,correct\n");
                for ((s, p), ok) in dataset.test.iter().zip(&r.predictions).zip(&r.correct) {
                    let _ = writeln!(csv, "{},{},{},{}", s.id, s.label, p, *ok as u8);
                }
                let preds = dir.join("probe_predictions.csv");
                write_atomic(&preds, csv.as_bytes())?;
                log::info!("probe top-1 {:.4}", r.top1);
                Ok(vec![json, preds])
            }
            Job::Analyze(c, network, dataset) => {
                let report = run_analysis(&network, &dataset, &c)?;
                log::info!(
                    "ambiguity p = {:.3e}, correctness p = {:.3e}",
                    report.kappa.ambiguity.welch.as_ref().map_or(f64::NAN, |w| w.p),
                    report.correctness.welch.as_ref().map_or(f64::NAN, |w| w.p)
                );
                write_analysis(dir, &dataset, &report)
            }
            Job::LossSurface(c) => {
                let points = loss_surface_grid(c.dim, &c.kappas, &c.s_grid())?;
                let path = dir.join("loss_surface.csv");
                write_loss_surface_csv(&path, &points)?;
                Ok(vec![path])
            }
        }
    }
}
