//! One binary file per split plus a CSV export.
//!
//! ```text
//! magic      8 bytes  "VSSLDATA"
//! version    u32 LE
//! hlen       u64 LE
//! header     hlen bytes of JSON (SplitHeader)
//! prototypes K·D f64 LE
//! features   n·D f64 LE, row-major
//! labels     n u32 LE
//! ambiguous  n u8 (0/1)
//! partner    n i32 LE (−1 when absent)
//! ids        n u64 LE
//! ```

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io_util::{read_file, write_atomic, ByteReader};

use super::synth::{Dataset, Sample, Split, SynthConfig};

pub const DATASET_MAGIC: &[u8; 8] = b"VSSLDATA";
pub const DATASET_VERSION: u32 = 1;
const DATASET_FORMAT: &str = "vissl-dataset";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SplitHeader {
    format: String,
    version: u32,
    split: Split,
    config: SynthConfig,
    count: usize,
    dim: usize,
    num_classes: usize,
}

pub fn split_file_name(split: Split) -> String {
    format!("{}.vsd", split.as_str())
}

fn encode_split(dataset: &Dataset, split: Split) -> Result<Vec<u8>> {
    let samples = dataset.split(split);
    let header = SplitHeader {
        format: DATASET_FORMAT.into(),
        version: DATASET_VERSION,
        split,
        config: dataset.config.clone(),
        count: samples.len(),
        dim: dataset.input_dim(),
        num_classes: dataset.num_classes(),
    };
    let json = serde_json::to_vec(&header)?;
    let mut out = Vec::new();
    out.extend_from_slice(DATASET_MAGIC);
    out.extend_from_slice(&DATASET_VERSION.to_le_bytes());
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    for p in &dataset.prototypes {
        p.iter().for_each(|v| out.extend_from_slice(&v.to_le_bytes()));
    }
    for s in samples {
        s.features.iter().for_each(|v| out.extend_from_slice(&v.to_le_bytes()));
    }
    for s in samples {
        out.extend_from_slice(&(s.label as u32).to_le_bytes());
    }
    out.extend(samples.iter().map(|s| s.ambiguous as u8));
    for s in samples {
        let p = s.mix_partner.map_or(-1, |p| p as i32);
        out.extend_from_slice(&p.to_le_bytes());
    }
    for s in samples {
        out.extend_from_slice(&s.id.to_le_bytes());
    }
    Ok(out)
}

/// Decoded split: (config, prototypes, samples).
pub fn load_split(path: &Path) -> Result<(SynthConfig, Split, Vec<Vec<f64>>, Vec<Sample>)> {
    let bytes = read_file(path)?;
    let bad = |reason: String| Error::Format { what: "dataset", path: path.to_path_buf(), reason };
    let mut r = ByteReader::new(&bytes);
    let magic = r.take(8).ok_or_else(|| bad("truncated magic".into()))?;
    if magic != DATASET_MAGIC {
        return Err(bad("bad magic bytes".into()));
    }
    let version = r.u32().ok_or_else(|| bad("truncated version".into()))?;
    if version != DATASET_VERSION {
        return Err(bad(format!("unsupported version {version} (expected {DATASET_VERSION})")));
    }
    let hlen = r.u64().ok_or_else(|| bad("truncated header length".into()))? as usize;
    let hbytes = r.take(hlen).ok_or_else(|| bad("truncated header".into()))?;
    let header: SplitHeader =
        serde_json::from_slice(hbytes).map_err(|e| bad(format!("header: {e}")))?;
    if header.format != DATASET_FORMAT {
        return Err(bad(format!("format tag {:?}", header.format)));
    }
    let (n, d, k) = (header.count, header.dim, header.num_classes);
    if d != header.config.input_dim || k != header.config.num_classes {
        return Err(bad("header dimensions disagree with its config".into()));
    }
    let trunc = || bad("truncated data section".into());
    let mut prototypes = Vec::with_capacity(k);
    for _ in 0..k {
        prototypes.push(r.f64s(d).ok_or_else(trunc)?);
    }
    let mut features = Vec::with_capacity(n);
    for _ in 0..n {
        features.push(r.f64s(d).ok_or_else(trunc)?);
    }
    let labels: Vec<u32> = (0..n).map(|_| r.u32()).collect::<Option<_>>().ok_or_else(trunc)?;
    let flags = r.take(n).ok_or_else(trunc)?.to_vec();
    let partners: Vec<i32> = (0..n).map(|_| r.i32()).collect::<Option<_>>().ok_or_else(trunc)?;
    let ids: Vec<u64> = (0..n).map(|_| r.u64()).collect::<Option<_>>().ok_or_else(trunc)?;
    if !r.is_empty() {
        return Err(bad(format!("{} trailing bytes", r.remaining())));
    }
    let mut samples = Vec::with_capacity(n);
    for (i, features) in features.into_iter().enumerate() {
        let label = labels[i] as usize;
        let mix_partner = (partners[i] >= 0).then_some(partners[i] as usize);
        if label >= k || mix_partner.is_some_and(|p| p >= k) {
            return Err(bad(format!("sample {i}: class id out of range")));
        }
        let ambiguous = match flags[i] {
            0 => false,
            1 => true,
            f => return Err(bad(format!("sample {i}: ambiguity flag {f}"))),
        };
        if ambiguous != mix_partner.is_some() {
            return Err(bad(format!("sample {i}: ambiguity flag disagrees with mix partner")));
        }
        samples.push(Sample { id: ids[i], features, label, ambiguous, mix_partner });
    }
    Ok((header.config, header.split, prototypes, samples))
}

/// Writes `{train,val,test}.vsd` and matching CSVs into `dir`; returns the
/// paths written.
pub fn save_dataset(dir: &Path, dataset: &Dataset) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for split in Split::ALL {
        let path = dir.join(split_file_name(split));
        write_atomic(&path, &encode_split(dataset, split)?)?;
        written.push(path);
        let csv = dir.join(format!("{}.csv", split.as_str()));
        write_split_csv(&csv, dataset.split(split))?;
        written.push(csv);
    }
    Ok(written)
}

pub fn load_dataset(dir: &Path) -> Result<Dataset> {
    let mut parts = Vec::new();
    for split in Split::ALL {
        let path = dir.join(split_file_name(split));
        let (config, found, protos, samples) = load_split(&path)?;
        if found != split {
            return Err(Error::Format {
                what: "dataset",
                path,
                reason: format!("contains the {} split", found.as_str()),
            });
        }
        parts.push((path, config, protos, samples));
    }
    let (_, config, prototypes, _) = &parts[0];
    let (config, prototypes) = (config.clone(), prototypes.clone());
    for (path, c, p, _) in &parts[1..] {
        if *c != config || *p != prototypes {
            return Err(Error::Format {
                what: "dataset",
                path: path.clone(),
                reason: "split was generated from a different configuration".into(),
            });
        }
    }
    let mut it = parts.into_iter().map(|(_, _, _, s)| s);
    Ok(Dataset {
        config,
        prototypes,
        train: it.next().unwrap_or_default(),
        val: it.next().unwrap_or_default(),
        test: it.next().unwrap_or_default(),
    })
}

pub fn write_split_csv(path: &Path, samples: &[Sample]) -> Result<()> {
    let dim = samples.first().map_or(0, |s| s.features.len());
    let mut out = String::from("id,label,ambiguous,mix_partner");
    for c in 0..dim {
        let _ = write!(out, ",x{c}");
    }
    out.push('\n');
    for s in samples {
        let partner = s.mix_partner.map_or(String::new(), |p| p.to_string());
        let _ = write!(out, "{},{},{},{}", s.id, s.label, s.ambiguous as u8, partner);
        for v in &s.features {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}
