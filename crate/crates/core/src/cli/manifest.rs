use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io_util::{read_string, write_atomic};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    Running,
    Succeeded,
    Failed,
}

/// Everything needed to rerun a command: the fully resolved configuration
/// plus provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub command: String,
    /// Resolved configuration with every default materialized.
    pub config: serde_json::Value,
    pub seed: u64,
    /// Output files, relative to the run directory.
    pub artifacts: Vec<String>,
    pub tool_version: String,
    pub started_at: String,
    pub finished_at: Option<String>,
    pub status: RunStatus,
    pub error: Option<String>,
}

impl RunManifest {
    pub fn start(command: &str, config: serde_json::Value, seed: u64) -> Self {
        Self {
            command: command.to_string(),
            config,
            seed,
            artifacts: Vec::new(),
            tool_version: TOOL_VERSION.to_string(),
            started_at: now(),
            finished_at: None,
            status: RunStatus::Running,
            error: None,
        }
    }

    pub fn finish(&mut self, outcome: std::result::Result<Vec<String>, String>) {
        self.finished_at = Some(now());
        match outcome {
            Ok(artifacts) => {
                self.artifacts = artifacts;
                self.status = RunStatus::Succeeded;
            }
            Err(e) => {
                self.status = RunStatus::Failed;
                self.error = Some(e);
            }
        }
    }
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

pub fn write_manifest(dir: &Path, manifest: &RunManifest) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(manifest)?;
    bytes.push(b'\n');
    write_atomic(&dir.join(MANIFEST_FILE), &bytes)
}

/// Loads a manifest; the second value holds warnings (e.g. a manifest from a
/// different tool version).
pub fn load_manifest(path: &Path) -> Result<(RunManifest, Vec<String>)> {
    let text = read_string(path)?;
    let manifest: RunManifest = serde_json::from_str(&text).map_err(|e| Error::Format {
        what: "manifest",
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    let mut warnings = Vec::new();
    if manifest.tool_version != TOOL_VERSION {
        warnings.push(format!(
            "manifest {} was written by version {} (running {TOOL_VERSION}); results may differ",
            path.display(),
            manifest.tool_version
        ));
    }
    Ok((manifest, warnings))
}
