//! Config layering: built-in defaults < config file < command-line flags.
//!
//! Files and flags are both turned into JSON values and merged key by key;
//! the merged value is then deserialized into the typed command config,
//! whose serde defaults fill in everything left unspecified. Serializing the
//! typed value back gives the fully resolved configuration.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::data::SynthConfig;
use crate::eval::{AnalysisConfig, ProbeConfig};
use crate::io_util::read_string;
use crate::train::TrainConfig;

use super::CliError;

/// Where a command gets its dataset: a `gen-data` directory or an inline
/// generator config.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSource {
    pub dir: Option<PathBuf>,
    pub synth: Option<SynthConfig>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainCommandConfig {
    /// Without `dir` or `synth`, the default generator is used.
    pub data: DataSource,
    pub train: TrainConfig,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeCommandConfig {
    pub checkpoint: Option<PathBuf>,
    /// Without `dir` or `synth`, the generator recorded in the checkpoint.
    pub data: DataSource,
    pub probe: ProbeConfig,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalyzeCommandConfig {
    pub checkpoint: Option<PathBuf>,
    pub data: DataSource,
    pub analysis: AnalysisConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossSurfaceConfig {
    pub dim: usize,
    pub kappas: Vec<f64>,
    pub s_min: f64,
    pub s_max: f64,
    pub s_steps: usize,
}

impl Default for LossSurfaceConfig {
    fn default() -> Self {
        Self { dim: 16, kappas: vec![0.01, 1.0, 10.0, 100.0, 1000.0], s_min: -0.9, s_max: 0.99, s_steps: 100 }
    }
}

impl LossSurfaceConfig {
    pub fn s_grid(&self) -> Vec<f64> {
        if self.s_steps == 1 {
            return vec![self.s_min];
        }
        let h = (self.s_max - self.s_min) / (self.s_steps - 1) as f64;
        (0..self.s_steps).map(|i| self.s_min + h * i as f64).collect()
    }
}

/// Reads a TOML or JSON config, chosen by file extension.
pub fn load_config_file(path: &Path) -> Result<Value, CliError> {
    let text = read_string(path).map_err(|e| CliError::Usage(format!("cannot read config file: {e}")))?;
    let parse_err = |e: String| CliError::Usage(format!("cannot parse config file {}: {e}", path.display()));
    let value: Value = match path.extension().and_then(|e| e.to_str()) {
        Some("toml") => toml::from_str(&text).map_err(|e| parse_err(e.to_string()))?,
        Some("json") => serde_json::from_str(&text).map_err(|e| parse_err(e.to_string()))?,
        _ => {
            return Err(CliError::Usage(format!(
                "config file {} must have a .toml or .json extension",
                path.display()
            )))
        }
    };
    if !value.is_object() {
        return Err(parse_err("top level must be a table".into()));
    }
    Ok(value)
}

/// Recursively overlays `top` onto `base`; objects merge, anything else
/// replaces.
pub fn merge(base: &mut Value, top: Value) {
    match (base, top) {
        (Value::Object(b), Value::Object(t)) => {
            for (k, v) in t {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, t) => *slot = t,
    }
}

/// Flag overrides as a sparse JSON object addressed by `/`-separated paths.
#[derive(Debug, Default)]
pub struct Overrides(Map<String, Value>);

impl Overrides {
    pub fn set(&mut self, path: &str, value: Option<impl Serialize>) -> &mut Self {
        let Some(value) = value else { return self };
        let value = serde_json::to_value(value).expect("flag values serialize");
        let keys: Vec<&str> = path.split('/').collect();
        let mut node = &mut self.0;
        for k in &keys[..keys.len() - 1] {
            node = node
                .entry(k.to_string())
                .or_insert_with(|| Value::Object(Map::new()))
                .as_object_mut()
                .expect("override paths do not collide");
        }
        node.insert(keys[keys.len() - 1].to_string(), value);
        self
    }

    pub fn into_value(self) -> Value {
        Value::Object(self.0)
    }
}

/// Merges file and flags and deserializes the result.
pub fn layer<T: DeserializeOwned>(file: Option<Value>, flags: Overrides) -> Result<T, CliError> {
    let mut merged = file.unwrap_or_else(|| Value::Object(Map::new()));
    merge(&mut merged, flags.into_value());
    serde_json::from_value(merged).map_err(|e| CliError::Usage(format!("invalid configuration: {e}")))
}

/// First 16 hex digits of SHA-256 over the command and canonical config.
/// serde_json objects keep keys sorted, so equal configs hash equally.
pub fn config_hash(command: &str, resolved: &Value) -> String {
    let mut h = Sha256::new();
    h.update(command.as_bytes());
    h.update([0u8]);
    h.update(resolved.to_string().as_bytes());
    h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
}
