//! Run directories and manifests from code: generate data, train, then rerun
//! the training from its manifest alone and compare the outputs byte for byte.

use serde_json::json;
use vi_simsiam::cli::{execute, load_manifest, prepare, rerun, Overrides, MANIFEST_FILE};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::temp_dir().join(format!("vi-simsiam-runs-example-{}", std::process::id()));

    let mut flags = Overrides::default();
    flags.set("samples_per_class", Some(30)).set("seed", Some(5));
    let data = execute(prepare("gen-data", None, flags, None)?, &out, false)?;
    println!("data  → {}", data.display());

    let config = json!({ "train": { "epochs": 5, "batch_size": 32 } });
    let mut flags = Overrides::default();
    flags.set("data/dir", Some(&data));
    let train = execute(prepare("train", Some(config), flags, None)?, &out, false)?;
    let (manifest, _) = load_manifest(&train.join(MANIFEST_FILE))?;
    println!("train → {} ({:?}, {} artifacts)", train.display(), manifest.status, manifest.artifacts.len());
    println!("resolved learning rate {}", manifest.config["train"]["base_lr"]);

    let again = rerun(&train.join(MANIFEST_FILE), Some(&out.join("rerun")), false)?;
    let identical = manifest
        .artifacts
        .iter()
        .all(|a| std::fs::read(train.join(a)).ok() == std::fs::read(again.join(a)).ok());
    println!("rerun → {} (identical outputs: {identical})", again.display());
    std::fs::remove_dir_all(&out)?;
    Ok(())
}
