//! Single-file model checkpoints.
//!
//! Layout:
//!
//! ```text
//! "EANNCKP1"                 8 bytes
//! header length              u32, little endian
//! header                     UTF-8 JSON (see [`Header`])
//! parameter values           f64 LE, manifest order
//! Adam first moments         f64 LE, trainable entries in manifest order
//! Adam second moments        f64 LE, same order
//! ```
//!
//! The header can be read without touching the blob.

use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Model, ModelConfig};
use crate::params::{AdamConfig, ParameterSet};
use crate::preprocess::Vocabulary;
use crate::tensor::Tensor;
use crate::train::BestEpoch;

pub const MAGIC: &[u8; 8] = b"EANNCKP1";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub trainable: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerState {
    pub step_count: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub format_version: u32,
    pub config: ModelConfig,
    pub vocabulary: Vocabulary,
    pub manifest: Vec<ManifestEntry>,
    pub optimizer: OptimizerState,
    pub best: Option<BestEpoch>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model: Model,
    pub best: Option<BestEpoch>,
}

impl Checkpoint {
    pub fn new(model: Model, best: Option<BestEpoch>) -> Self {
        Self { model, best }
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let params = self.model.params();
        let adam = AdamConfig::default();
        let header = Header {
            format_version: FORMAT_VERSION,
            config: self.model.config().clone(),
            vocabulary: self.model.vocab().clone(),
            manifest: params
                .ids()
                .map(|id| ManifestEntry {
                    name: params.name(id).to_string(),
                    shape: params.value(id).shape().to_vec(),
                    trainable: params.is_trainable(id),
                })
                .collect(),
            optimizer: OptimizerState {
                step_count: params.step_count(),
                beta1: adam.beta1,
                beta2: adam.beta2,
                eps: adam.eps,
            },
            best: self.best,
        };
        let json = serde_json::to_vec(&header)?;
        let header_len = u32::try_from(json.len()).map_err(|_| Error::Checkpoint("header too large".into()))?;

        let mut out = Vec::with_capacity(12 + json.len() + 8 * blob_len(&header.manifest));
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&header_len.to_le_bytes());
        out.extend_from_slice(&json);
        let put = |out: &mut Vec<u8>, xs: &[f64]| xs.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes()));
        for id in params.ids() {
            put(&mut out, params.value(id).data());
        }
        let trainable: Vec<_> = params.ids().filter(|&id| params.is_trainable(id)).collect();
        for &id in &trainable {
            put(&mut out, params.adam_moments(id).0);
        }
        for &id in &trainable {
            put(&mut out, params.adam_moments(id).1);
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (header, body) = split_header(bytes)?;
        let expected = blob_len(&header.manifest);
        if body.len() != 8 * expected {
            return Err(Error::Checkpoint(format!(
                "blob holds {} bytes, manifest needs {}",
                body.len(),
                8 * expected
            )));
        }
        let mut floats = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")));
        let mut take = |n: usize| -> Vec<f64> { floats.by_ref().take(n).collect() };

        let mut params = ParameterSet::new();
        for e in &header.manifest {
            let n = e.shape.iter().product();
            params.insert(e.name.clone(), Tensor::new(e.shape.clone(), take(n))?, e.trainable)?;
        }
        let trainable: Vec<_> = params.ids().filter(|&id| params.is_trainable(id)).collect();
        let firsts: Vec<Vec<f64>> = trainable.iter().map(|&id| take(params.value(id).numel())).collect();
        for (&id, m) in trainable.iter().zip(firsts) {
            let v = take(m.len());
            params.set_adam_moments(id, m, v);
        }
        params.set_step_count(header.optimizer.step_count);

        let model = Model::from_parts(header.config, params, header.vocabulary)?;
        Ok(Self {
            model,
            best: header.best,
        })
    }
}

/// Number of f64 values the blob must hold.
fn blob_len(manifest: &[ManifestEntry]) -> usize {
    manifest
        .iter()
        .map(|e| {
            let n: usize = e.shape.iter().product();
            if e.trainable {
                3 * n
            } else {
                n
            }
        })
        .sum()
}

fn split_header(bytes: &[u8]) -> Result<(Header, &[u8])> {
    if bytes.len() < 12 || &bytes[..8] != MAGIC {
        return Err(Error::Checkpoint("not a checkpoint (bad magic)".into()));
    }
    let len = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes")) as usize;
    let end = 12 + len;
    if bytes.len() < end {
        return Err(Error::Checkpoint("truncated header".into()));
    }
    let header = parse_header(&bytes[12..end])?;
    Ok((header, &bytes[end..]))
}

fn parse_header(json: &[u8]) -> Result<Header> {
    let value: serde_json::Value = serde_json::from_slice(json)?;
    let version = value.get("format_version").and_then(serde_json::Value::as_u64);
    if version != Some(u64::from(FORMAT_VERSION)) {
        return Err(Error::Checkpoint(format!("unsupported format version {version:?}")));
    }
    Ok(serde_json::from_value(value)?)
}

pub fn save_checkpoint(ckpt: &Checkpoint, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, ckpt.to_bytes()?).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Checkpoint::from_bytes(&bytes)
}

/// Reads only the magic, length and header.
pub fn read_header(path: impl AsRef<Path>) -> Result<Header> {
    let path = path.as_ref();
    let mut f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut prefix = [0u8; 12];
    f.read_exact(&mut prefix)
        .map_err(|_| Error::Checkpoint("file too short".into()))?;
    if &prefix[..8] != MAGIC {
        return Err(Error::Checkpoint("not a checkpoint (bad magic)".into()));
    }
    let len = u32::from_le_bytes(prefix[8..].try_into().expect("4 bytes")) as usize;
    let mut json = vec![0u8; len];
    f.read_exact(&mut json)
        .map_err(|_| Error::Checkpoint("truncated header".into()))?;
    parse_header(&json)
}
