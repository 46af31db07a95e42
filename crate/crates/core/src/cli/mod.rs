//! The `vissl` command line: reproducible runs of data generation, training,
//! probing, analysis and the loss surface, each in its own content-addressed
//! run directory with a manifest sufficient to rerun it.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 runtime failure.

mod commands;
mod config;
mod manifest;
mod rundir;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

pub use commands::{prepare, Prepared, COMMANDS};
pub use config::{
    config_hash, layer, load_config_file, merge, AnalyzeCommandConfig, DataSource, LossSurfaceConfig, Overrides,
    ProbeCommandConfig, TrainCommandConfig,
};
pub use manifest::{load_manifest, write_manifest, RunManifest, RunStatus, MANIFEST_FILE, TOOL_VERSION};
pub use rundir::{RunDir, LOCK_FILE};

use crate::losses::{LossKind, Pairing};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Runtime(#[from] crate::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "vissl", version, about = "Uncertainty-aware SimSiam on the hypersphere")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// TOML or JSON config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Parent directory for run directories.
    #[arg(long, default_value = "runs")]
    out: PathBuf,
    /// Overwrite an existing run directory.
    #[arg(long)]
    force: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic multiview dataset.
    GenData {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        num_classes: Option<usize>,
        #[arg(long)]
        input_dim: Option<usize>,
        #[arg(long)]
        samples_per_class: Option<usize>,
        #[arg(long)]
        noise_scale: Option<f64>,
        #[arg(long)]
        ambiguity_fraction: Option<f64>,
        #[arg(long)]
        ambiguity_mix: Option<f64>,
    },
    /// Train an encoder with SimSiam, constant-κ vMF or VI-SimSiam.
    Train {
        #[command(flatten)]
        common: Common,
        /// Dataset directory written by `gen-data`.
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long, value_parser = parse_loss)]
        loss: Option<LossKind>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        #[arg(long)]
        batch_size: Option<usize>,
        #[arg(long)]
        views: Option<usize>,
        #[arg(long, value_parser = parse_pairing)]
        pairing: Option<Pairing>,
    },
    /// Linear probe on frozen features of a checkpoint.
    Probe {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
    },
    /// κ statistics, correctness and augmentation analyses, 2-D projection.
    Analyze {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        data: Option<PathBuf>,
        /// Views per sample for κ estimation.
        #[arg(long)]
        views: Option<usize>,
    },
    /// Tabulate the per-pair loss term over κ and cosine similarity.
    LossSurface {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        dim: Option<usize>,
        /// Comma-separated κ values.
        #[arg(long, value_delimiter = ',')]
        kappas: Option<Vec<f64>>,
        #[arg(long)]
        s_steps: Option<usize>,
    },
    /// Run the numerical oracle suite.
    Selftest,
    /// Rerun a command from its manifest.
    Rerun {
        manifest: PathBuf,
        /// Parent directory for the new run (default: that of the original).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        force: bool,
    },
}

fn parse_loss(s: &str) -> Result<LossKind, String> {
    serde_json::from_value(serde_json::Value::String(s.into()))
        .map_err(|_| format!("unknown loss `{s}` (simsiam, vmf-const-kappa, vi-simsiam)"))
}

fn parse_pairing(s: &str) -> Result<Pairing, String> {
    serde_json::from_value(serde_json::Value::String(s.into()))
        .map_err(|_| format!("unknown pairing `{s}` (standard-to-all, all-pairs, all-to-standard)"))
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            e.exit_code()
        }
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    let mut o = Overrides::default();
    let (name, common) = match command {
        Command::Selftest => return selftest(),
        Command::Rerun { manifest, out, force } => {
            let dir = rerun(&manifest, out.as_deref(), force)?;
            println!("{}", dir.display());
            return Ok(());
        }
        Command::GenData {
            common,
            num_classes,
            input_dim,
            samples_per_class,
            noise_scale,
            ambiguity_fraction,
            ambiguity_mix,
        } => {
            o.set("seed", common.seed)
                .set("num_classes", num_classes)
                .set("input_dim", input_dim)
                .set("samples_per_class", samples_per_class)
                .set("noise_scale", noise_scale)
                .set("ambiguity_fraction", ambiguity_fraction)
                .set("ambiguity_mix", ambiguity_mix);
            ("gen-data", common)
        }
        Command::Train { common, data, loss, epochs, lr, batch_size, views, pairing } => {
            o.set("train/seed", common.seed)
                .set("data/dir", data)
                .set("train/loss", loss)
                .set("train/epochs", epochs)
                .set("train/base_lr", lr)
                .set("train/batch_size", batch_size)
                .set("train/num_views", views)
                .set("train/pairing", pairing);
            ("train", common)
        }
        Command::Probe { common, checkpoint, data, epochs, lr } => {
            o.set("probe/seed", common.seed)
                .set("checkpoint", checkpoint)
                .set("data/dir", data)
                .set("probe/epochs", epochs)
                .set("probe/lr", lr);
            ("probe", common)
        }
        Command::Analyze { common, checkpoint, data, views } => {
            o.set("analysis/seed", common.seed)
                .set("analysis/probe/seed", common.seed)
                .set("checkpoint", checkpoint)
                .set("data/dir", data)
                .set("analysis/views_per_sample", views);
            ("analyze", common)
        }
        Command::LossSurface { common, dim, kappas, s_steps } => {
            o.set("dim", dim).set("kappas", kappas).set("s_steps", s_steps);
            ("loss-surface", common)
        }
    };
    let file = common.config.as_deref().map(load_config_file).transpose()?;
    let prepared = prepare(name, file, o, common.seed)?;
    let dir = execute(prepared, &common.out, common.force)?;
    println!("{}", dir.display());
    Ok(())
}

fn selftest() -> Result<(), CliError> {
    let checks = crate::selftest::run_selftest();
    for c in &checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    if failed > 0 {
        return Err(CliError::Runtime(crate::Error::Numerical {
            op: "selftest",
            reason: format!("{failed} of {} checks failed", checks.len()),
        }));
    }
    Ok(())
}

/// The content-addressed run directory of a prepared command.
pub fn run_dir_for(out: &Path, prepared: &Prepared) -> PathBuf {
    out.join(format!("{}-{}", prepared.command, config_hash(prepared.command, &prepared.resolved)))
}

/// Claims the run directory, writes the manifest, runs, and finalizes the
/// manifest; returns the run directory.
pub fn execute(prepared: Prepared, out: &Path, force: bool) -> Result<PathBuf, CliError> {
    let dir = RunDir::claim(run_dir_for(out, &prepared), force)?;
    let mut manifest = RunManifest::start(prepared.command, prepared.resolved.clone(), prepared.seed);
    write_manifest(dir.path(), &manifest)?;
    log::info!("{} → {}", prepared.command, dir.path().display());
    let result = prepared.execute(dir.path());
    manifest.finish(match &result {
        Ok(files) => Ok(dir.relative(files)),
        Err(e) => Err(e.to_string()),
    });
    write_manifest(dir.path(), &manifest)?;
    result?;
    Ok(dir.path().to_path_buf())
}

/// Reruns the command recorded in a manifest with exactly its resolved
/// configuration.
pub fn rerun(manifest_path: &Path, out: Option<&Path>, force: bool) -> Result<PathBuf, CliError> {
    let (manifest, warnings) = load_manifest(manifest_path)?;
    for w in warnings {
        log::warn!("{w}");
    }
    if !COMMANDS.contains(&manifest.command.as_str()) {
        return Err(CliError::Usage(format!("manifest names unknown command `{}`", manifest.command)));
    }
    let default_out = manifest_path.parent().and_then(Path::parent).unwrap_or(Path::new("."));
    let prepared = prepare(&manifest.command, Some(manifest.config), Overrides::default(), Some(manifest.seed))?;
    execute(prepared, out.unwrap_or(default_out), force)
}
