//! JSON Lines datasets and estimate files.
//!
//! Every line of a split file is one [`DatasetRecord`]. Units are SI: metres,
//! seconds, radians, metres per second.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use hilo_fusion_core::{EgoMotion, ObjectState, SampleBuffer, SensorFrame};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}, record {index}: {message}")]
    Parse {
        path: String,
        index: usize,
        message: String,
    },
    #[error("record {index}: estimate sample id {estimate:?} does not match dataset sample id {dataset:?}")]
    Misaligned {
        index: usize,
        estimate: String,
        dataset: String,
    },
    #[error("{estimates} estimate records for {dataset} dataset records")]
    LengthMismatch { estimates: usize, dataset: usize },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// One annotated sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub sample_id: String,
    /// Synthetic recording session; whole sessions go to one split.
    pub session: String,
    pub t_a: f64,
    pub ego: EgoMotion,
    pub frames: Vec<SensorFrame>,
    pub annotations: Vec<ObjectState>,
}

impl DatasetRecord {
    pub fn buffer(&self) -> SampleBuffer {
        SampleBuffer {
            t_a: self.t_a,
            ego: self.ego,
            frames: self.frames.clone(),
        }
    }
}

/// Fused objects of one sample, as written by `fuse`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub sample_id: String,
    pub objects: Vec<ObjectState>,
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, DatasetError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (index, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|e| DatasetError::Parse {
            path: path.display().to_string(),
            index,
            message: e.to_string(),
        })?;
        out.push(rec);
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<(), DatasetError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    for r in records {
        serde_json::to_writer(&mut w, r).map_err(|e| DatasetError::Parse {
            path: path.display().to_string(),
            index: 0,
            message: e.to_string(),
        })?;
        w.write_all(b"\n").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), DatasetError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| DatasetError::Parse {
        path: path.display().to_string(),
        index: 0,
        message: e.to_string(),
    })?;
    text.push('\n');
    std::fs::write(path, text).map_err(io_err(path))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, DatasetError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| DatasetError::Parse {
        path: path.display().to_string(),
        index: 0,
        message: e.to_string(),
    })
}

/// Hex SHA-256 of a file's bytes.
pub fn file_sha256(path: &Path) -> Result<String, DatasetError> {
    let bytes = std::fs::read(path).map_err(io_err(path))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Hex SHA-256 of a value's compact JSON encoding.
pub fn json_sha256<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("serializable");
    hex::encode(Sha256::digest(&bytes))
}

pub const SPLITS: [&str; 3] = ["train", "val", "test"];

pub fn split_path(dir: &Path, split: &str) -> PathBuf {
    dir.join(format!("{split}.jsonl"))
}

/// Checks that estimates and dataset records line up one to one.
pub fn check_alignment(estimates: &[EstimateRecord], records: &[DatasetRecord]) -> Result<(), DatasetError> {
    for (index, (e, r)) in estimates.iter().zip(records).enumerate() {
        if e.sample_id != r.sample_id {
            return Err(DatasetError::Misaligned {
                index,
                estimate: e.sample_id.clone(),
                dataset: r.sample_id.clone(),
            });
        }
    }
    if estimates.len() != records.len() {
        return Err(DatasetError::LengthMismatch {
            estimates: estimates.len(),
            dataset: records.len(),
        });
    }
    Ok(())
}
