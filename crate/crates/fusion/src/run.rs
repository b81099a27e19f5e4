//! Running a fusion method over a dataset.

use std::sync::Arc;
use std::time::Instant;

use hilo_fusion_core::akf::{AkfError, AkfFuser, Method, PipelineConfig};
use hilo_fusion_core::hilo::{HiloError, HiloModel};
use hilo_fusion_core::{ObjectState, SampleBuffer};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{DatasetRecord, EstimateRecord};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("record {index} ({sample_id}): {source}")]
    Akf {
        index: usize,
        sample_id: String,
        #[source]
        source: AkfError,
    },
    #[error("record {index} ({sample_id}): {source}")]
    Hilo {
        index: usize,
        sample_id: String,
        #[source]
        source: HiloError,
    },
    #[error("invalid pipeline config: {0}")]
    Config(AkfError),
    #[error("method {0} needs {1}")]
    MissingArtifact(&'static str, &'static str),
}

/// A ready-to-run fusion method.
#[derive(Clone, Debug)]
pub enum Fuser {
    Pipeline { method: Method, fuser: Arc<AkfFuser> },
    Hilo(Arc<HiloModel>),
}

enum FuseFailure {
    Akf(AkfError),
    Hilo(HiloError),
}

impl Fuser {
    pub fn pipeline(method: Method, cfg: PipelineConfig) -> Result<Self, RunError> {
        Ok(Fuser::Pipeline {
            method,
            fuser: Arc::new(AkfFuser::new(cfg).map_err(RunError::Config)?),
        })
    }

    pub fn hilo(model: HiloModel) -> Self {
        Fuser::Hilo(Arc::new(model))
    }

    pub fn method(&self) -> Method {
        match self {
            Fuser::Pipeline { method, .. } => *method,
            Fuser::Hilo(_) => Method::Hilo,
        }
    }

    /// Fused objects of one sample. HiLO slots classified as no-object are
    /// dropped; the Kalman path applies its output threshold itself.
    fn fuse_inner(&self, buf: &SampleBuffer) -> Result<Vec<ObjectState>, FuseFailure> {
        match self {
            Fuser::Pipeline { fuser, .. } => fuser
                .fuse_sample(buf)
                .map(|v| v.into_iter().map(|e| e.state).collect())
                .map_err(FuseFailure::Akf),
            Fuser::Hilo(model) => model
                .forward(buf)
                .map(|slots| slots.iter().filter_map(|s| s.to_object()).collect())
                .map_err(FuseFailure::Hilo),
        }
    }

    pub fn fuse(&self, index: usize, record: &DatasetRecord) -> Result<Timed, RunError> {
        let buf = record.buffer();
        let start = Instant::now();
        let out = self.fuse_inner(&buf);
        let seconds = start.elapsed().as_secs_f64();
        let objects = out.map_err(|e| match e {
            FuseFailure::Akf(source) => RunError::Akf {
                index,
                sample_id: record.sample_id.clone(),
                source,
            },
            FuseFailure::Hilo(source) => RunError::Hilo {
                index,
                sample_id: record.sample_id.clone(),
                source,
            },
        })?;
        Ok(Timed {
            estimate: EstimateRecord {
                sample_id: record.sample_id.clone(),
                objects,
            },
            seconds,
        })
    }
}

/// One fused sample and the time spent in the fusion call alone.
#[derive(Clone, Debug)]
pub struct Timed {
    pub estimate: EstimateRecord,
    pub seconds: f64,
}

/// Per-sample latency statistics in milliseconds.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TimingStats {
    pub samples: usize,
    pub mean_ms: f64,
    pub median_ms: f64,
    pub p99_ms: f64,
    pub max_ms: f64,
}

impl TimingStats {
    pub fn from_seconds(seconds: &[f64]) -> Self {
        if seconds.is_empty() {
            return Self::default();
        }
        let ms: Vec<f64> = seconds.iter().map(|s| s * 1e3).collect();
        let pct = |q| crate::sim::percentile(&ms, q).unwrap_or(0.0);
        Self {
            samples: ms.len(),
            mean_ms: ms.iter().sum::<f64>() / ms.len() as f64,
            median_ms: pct(0.5),
            p99_ms: pct(0.99),
            max_ms: ms.iter().cloned().fold(0.0, f64::max),
        }
    }
}

pub struct FuseOutput {
    pub estimates: Vec<EstimateRecord>,
    pub timing: TimingStats,
}

/// Fuses every record, in parallel over samples. Output order follows the
/// input order. Latencies measured under parallel load are pessimistic; use
/// a single job for timing runs.
pub fn fuse_dataset(fuser: &Fuser, records: &[DatasetRecord]) -> Result<FuseOutput, RunError> {
    let timed: Vec<Timed> = records
        .par_iter()
        .enumerate()
        .map(|(i, r)| fuser.fuse(i, r))
        .collect::<Result<_, _>>()?;
    let seconds: Vec<f64> = timed.iter().map(|t| t.seconds).collect();
    Ok(FuseOutput {
        timing: TimingStats::from_seconds(&seconds),
        estimates: timed.into_iter().map(|t| t.estimate).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn timing_stats() {
        let t = TimingStats::from_seconds(&[0.001, 0.002, 0.003, 0.010]);
        assert_eq!(t.samples, 4);
        assert!((t.mean_ms - 4.0).abs() < 1e-12);
        assert!((t.median_ms - 2.5).abs() < 1e-12);
        assert!((t.max_ms - 10.0).abs() < 1e-12);
        assert_eq!(TimingStats::from_seconds(&[]), TimingStats::default());
    }
}
