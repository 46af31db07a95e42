//! Checkpoint container.
//!
//! ```text
//! magic   8 bytes  "VSSLCKPT"
//! version u32 LE
//! hlen    u64 LE   length of the JSON header in bytes
//! header  hlen bytes of UTF-8 JSON (CheckpointHeader)
//! data    f64 LE arrays, concatenated in header.tensors order
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::autodiff::Tensor;
use crate::error::{Error, Result};
use crate::io_util::{read_file, write_atomic, ByteReader};

use super::config::ModelConfig;
use super::network::{Network, ParameterStore};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"VSSLCKPT";
pub const CHECKPOINT_VERSION: u32 = 1;
pub const CHECKPOINT_FORMAT: &str = "vissl-checkpoint";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TensorKind {
    Param,
    Buffer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub kind: TensorKind,
    pub shape: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub format: String,
    pub version: u32,
    pub model: ModelConfig,
    pub seed: u64,
    pub epoch: usize,
    /// Free-form run metadata (training configuration, loss kind).
    #[serde(default)]
    pub meta: serde_json::Value,
    pub tensors: Vec<TensorEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub header: CheckpointHeader,
    pub network: Network,
}

impl Checkpoint {
    pub fn new(network: Network, seed: u64, epoch: usize, meta: serde_json::Value) -> Self {
        let store = network.store();
        let tensors = store
            .params
            .iter()
            .map(|(n, t)| (n, t, TensorKind::Param))
            .chain(store.buffers.iter().map(|(n, t)| (n, t, TensorKind::Buffer)))
            .map(|(name, t, kind)| TensorEntry {
                name: name.clone(),
                kind,
                shape: t.shape().to_vec(),
            })
            .collect();
        let header = CheckpointHeader {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            model: network.config().clone(),
            seed,
            epoch,
            meta,
            tensors,
        };
        Self { header, network }
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let header = serde_json::to_vec(&self.header)?;
        let store = self.network.store();
        let mut out = Vec::with_capacity(20 + header.len() + 8 * store.num_parameters());
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        out.extend_from_slice(&(header.len() as u64).to_le_bytes());
        out.extend_from_slice(&header);
        for entry in &self.header.tensors {
            let t = match entry.kind {
                TensorKind::Param => &store.params[&entry.name],
                TensorKind::Buffer => &store.buffers[&entry.name],
            };
            for v in t.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self> {
        let bad = |reason: String| Error::Format {
            what: "checkpoint",
            path: path.to_path_buf(),
            reason,
        };
        let mut r = ByteReader::new(bytes);
        if r.take(8) != Some(CHECKPOINT_MAGIC.as_slice()) {
            return Err(bad("missing VSSLCKPT magic".into()));
        }
        let version = r.u32().ok_or_else(|| bad("truncated version".into()))?;
        if version != CHECKPOINT_VERSION {
            return Err(bad(format!("unsupported version {version}")));
        }
        let hlen = r.u64().ok_or_else(|| bad("truncated header length".into()))? as usize;
        let body = r.take(hlen).ok_or_else(|| bad("truncated header".into()))?;
        let header: CheckpointHeader =
            serde_json::from_slice(body).map_err(|e| bad(format!("header: {e}")))?;
        if header.format != CHECKPOINT_FORMAT {
            return Err(bad(format!("unexpected format tag {:?}", header.format)));
        }
        let mut params = BTreeMap::new();
        let mut buffers = BTreeMap::new();
        for entry in &header.tensors {
            let n: usize = entry.shape.iter().product();
            let data = r
                .f64s(n)
                .ok_or_else(|| bad(format!("truncated data for {}", entry.name)))?;
            let t = Tensor::new(entry.shape.clone(), data)?;
            let map = match entry.kind {
                TensorKind::Param => &mut params,
                TensorKind::Buffer => &mut buffers,
            };
            if map.insert(entry.name.clone(), t).is_some() {
                return Err(bad(format!("duplicate tensor {}", entry.name)));
            }
        }
        if !r.is_empty() {
            return Err(bad(format!("{} trailing bytes", r.remaining())));
        }
        let store = ParameterStore {
            params,
            buffers,
            init_seed: header.seed,
        };
        let network = Network::from_parts(header.model.clone(), store)
            .map_err(|e| bad(format!("inconsistent tensors: {e}")))?;
        Ok(Self { header, network })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_bytes()?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = read_file(path)?;
        Self::from_bytes(&bytes, path)
    }
}
