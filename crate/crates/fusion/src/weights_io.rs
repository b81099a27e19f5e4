//! The `.hilo` weight file.
//!
//! ```text
//! u32 LE   header length in bytes
//! [u8]     UTF-8 JSON header: magic, version, hyper_params, tensors
//!          (name, shape, offset, length; offset and length in payload bytes)
//! [f32 LE] payload, tensors back to back in manifest order
//! u32 LE   CRC-32 (IEEE) of the payload
//! ```
//!
//! The training tools write the same layout, so any change here is a format
//! version bump.

use std::fs;
use std::path::Path;

use hilo_fusion_core::hilo::{manifest, HiloError, HiloHyperParams, HiloWeights, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub const MAGIC: &str = "HILO";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum WeightsError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("file truncated: need {needed} bytes, have {available}")]
    Truncated { needed: usize, available: usize },
    #[error("bad magic {0:?}, not a weight file")]
    BadMagic(String),
    #[error("unsupported format version {found} (this build reads {FORMAT_VERSION})")]
    Version { found: u32 },
    #[error("malformed header: {0}")]
    Header(String),
    #[error("payload checksum mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    Checksum { stored: u32, computed: u32 },
    #[error("tensor {name}: offset {offset} and length {length} do not fit the payload")]
    Layout { name: String, offset: usize, length: usize },
    #[error("shape mismatch: {0}")]
    Shape(HiloError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: usize,
    pub length: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightHeader {
    pub magic: String,
    pub version: u32,
    pub hyper_params: HiloHyperParams,
    pub tensors: Vec<TensorEntry>,
}

/// A loaded weight file.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightFile {
    pub hyper_params: HiloHyperParams,
    pub weights: HiloWeights,
    pub param_count: usize,
}

pub fn encode_weights(hp: &HiloHyperParams, w: &HiloWeights) -> Result<Vec<u8>, WeightsError> {
    w.validate(hp).map_err(WeightsError::Shape)?;
    let mut payload = Vec::with_capacity(w.param_count() * 4);
    let mut entries = Vec::with_capacity(w.tensors.len());
    for t in &w.tensors {
        let offset = payload.len();
        for v in &t.data {
            payload.extend_from_slice(&v.to_le_bytes());
        }
        entries.push(TensorEntry {
            name: t.name.clone(),
            shape: t.shape.clone(),
            offset,
            length: payload.len() - offset,
        });
    }
    let header = WeightHeader {
        magic: MAGIC.into(),
        version: FORMAT_VERSION,
        hyper_params: hp.clone(),
        tensors: entries,
    };
    let header = serde_json::to_vec(&header).map_err(|e| WeightsError::Header(e.to_string()))?;
    let mut out = Vec::with_capacity(8 + header.len() + payload.len());
    out.extend_from_slice(&(header.len() as u32).to_le_bytes());
    out.extend_from_slice(&header);
    out.extend_from_slice(&payload);
    out.extend_from_slice(&crc32fast::hash(&payload).to_le_bytes());
    Ok(out)
}

fn take(bytes: &[u8], at: usize, n: usize) -> Result<&[u8], WeightsError> {
    bytes.get(at..at + n).ok_or(WeightsError::Truncated {
        needed: at + n,
        available: bytes.len(),
    })
}

fn u32_at(bytes: &[u8], at: usize) -> Result<u32, WeightsError> {
    Ok(u32::from_le_bytes(take(bytes, at, 4)?.try_into().unwrap()))
}

pub fn decode_weights(bytes: &[u8]) -> Result<WeightFile, WeightsError> {
    let header_len = u32_at(bytes, 0)? as usize;
    let header_bytes = take(bytes, 4, header_len)?;
    // check magic and version before trusting the rest of the header
    let raw: serde_json::Value =
        serde_json::from_slice(header_bytes).map_err(|e| WeightsError::Header(e.to_string()))?;
    let magic = raw.get("magic").and_then(|m| m.as_str()).unwrap_or_default();
    if magic != MAGIC {
        return Err(WeightsError::BadMagic(magic.into()));
    }
    let version = raw.get("version").and_then(|v| v.as_u64()).unwrap_or(0) as u32;
    if version != FORMAT_VERSION {
        return Err(WeightsError::Version { found: version });
    }
    let header: WeightHeader = serde_json::from_value(raw).map_err(|e| WeightsError::Header(e.to_string()))?;

    let payload_start = 4 + header_len;
    if bytes.len() < payload_start + 4 {
        return Err(WeightsError::Truncated {
            needed: payload_start + 4,
            available: bytes.len(),
        });
    }
    let payload = &bytes[payload_start..bytes.len() - 4];
    let stored = u32_at(bytes, bytes.len() - 4)?;
    let computed = crc32fast::hash(payload);
    if stored != computed {
        return Err(WeightsError::Checksum { stored, computed });
    }

    let mut tensors = Vec::with_capacity(header.tensors.len());
    for e in &header.tensors {
        let numel: usize = e.shape.iter().product();
        let fits = e.length == numel * 4 && e.offset.checked_add(e.length).is_some_and(|end| end <= payload.len());
        if !fits {
            return Err(WeightsError::Layout {
                name: e.name.clone(),
                offset: e.offset,
                length: e.length,
            });
        }
        let data = payload[e.offset..e.offset + e.length]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        tensors.push(Tensor {
            name: e.name.clone(),
            shape: e.shape.clone(),
            data,
        });
    }
    let weights = HiloWeights { tensors };
    let param_count = weights.validate(&header.hyper_params).map_err(WeightsError::Shape)?;
    Ok(WeightFile {
        hyper_params: header.hyper_params,
        weights,
        param_count,
    })
}

pub fn save_weights(path: &Path, hp: &HiloHyperParams, w: &HiloWeights) -> Result<(), WeightsError> {
    let bytes = encode_weights(hp, w)?;
    fs::write(path, bytes).map_err(|source| WeightsError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_weights(path: &Path) -> Result<WeightFile, WeightsError> {
    let bytes = fs::read(path).map_err(|source| WeightsError::Io {
        path: path.display().to_string(),
        source,
    })?;
    decode_weights(&bytes)
}

/// Untrained weights: uniform in `+-1/sqrt(fan_in)` for matrices, zero
/// biases, unit layer-norm gains and small queries. Deterministic in `seed`.
pub fn random_weights(hp: &HiloHyperParams, seed: u64) -> HiloWeights {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shapes = manifest(hp);
    let fan_in = |name: &str| {
        shapes
            .iter()
            .find(|(n, _)| n == name)
            .and_then(|(_, s)| s.last().copied())
            .unwrap_or(1)
    };
    HiloWeights::from_fn(hp, |name, _| {
        if name.contains("norm") {
            if name.ends_with(".weight") {
                1.0
            } else {
                0.0
            }
        } else if name.ends_with("bias") {
            0.0
        } else if name == "query_embed" || name == "null_token" {
            rng.gen_range(-1.0..1.0)
        } else {
            let bound = 1.0 / (fan_in(name) as f32).sqrt();
            rng.gen_range(-bound..bound)
        }
    })
}
