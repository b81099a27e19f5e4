//! Synthetic multi-sensor datasets.
//!
//! A dataset is a list of recording sessions. Every session has its own
//! seeded random stream and goes to exactly one split, so samples from one
//! session never leak between training and testing.

mod filters;
mod preset;
mod scene;
mod sensor;

use std::collections::BTreeMap;
use std::path::Path;

use hilo_fusion_core::frame::PerKind;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{split_path, write_json, write_jsonl, DatasetError, DatasetRecord, SPLITS};

pub use filters::{apply_confidence, apply_filters, apply_fov, calibrate_thresholds, percentile};
pub use preset::{default_rig, DomainPreset, SensorModel};
pub use scene::{back_propagate, draw_ego, generate_scene};
pub use sensor::{simulate_sensor, MIN_REPORTED_VARIANCE};

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("invalid simulator config: {0}")]
    InvalidConfig(String),
    #[error("placed only {placed} of {wanted} objects within the rejection budget")]
    RejectionBudget { placed: usize, wanted: usize },
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub preset: DomainPreset,
    pub session_len: usize,
    /// Time between samples within a session (s).
    pub sample_period: f64,
    pub fov_half_extent: f64,
    /// Percentile for the confidence filter; `None` disables it.
    pub confidence_percentile: Option<f64>,
    /// Train, validation and test shares.
    pub split_ratios: [f64; 3],
    pub max_objects: usize,
    pub rejection_budget: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            preset: DomainPreset::highway(),
            session_len: 50,
            sample_period: 0.04,
            fov_half_extent: 100.0,
            confidence_percentile: Some(0.05),
            split_ratios: [0.75, 0.15, 0.10],
            max_objects: 20,
            rejection_budget: 10_000,
        }
    }
}

impl SimConfig {
    pub fn for_preset(preset: DomainPreset) -> Self {
        Self {
            preset,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        self.preset.validate()?;
        let sum: f64 = self.split_ratios.iter().sum();
        if (sum - 1.0).abs() > 1e-9 || self.split_ratios.iter().any(|r| *r < 0.0) {
            return Err(SimError::InvalidConfig(format!("split ratios sum to {sum}, not 1")));
        }
        if self.session_len == 0 {
            return Err(SimError::InvalidConfig("session length must be positive".into()));
        }
        if !(self.fov_half_extent > 0.0 && self.sample_period > 0.0) {
            return Err(SimError::InvalidConfig(
                "field of view and sample period must be positive".into(),
            ));
        }
        if let Some(q) = self.confidence_percentile {
            if !(0.0..=1.0).contains(&q) {
                return Err(SimError::InvalidConfig("confidence percentile outside [0, 1]".into()));
            }
        }
        if self.max_objects == 0 {
            return Err(SimError::InvalidConfig("max objects must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub domain: String,
    pub seed: u64,
    pub samples: usize,
    pub config: SimConfig,
    /// Session id to split name.
    pub sessions: BTreeMap<String, String>,
    pub split_sizes: BTreeMap<String, usize>,
    /// Calibrated existence thresholds of the confidence filter.
    pub thresholds: Option<PerKind<f64>>,
    /// Names of datasets merged into this one, if any.
    #[serde(default)]
    pub combined_from: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratedDataset {
    pub manifest: DatasetManifest,
    /// Train, validation and test records.
    pub splits: [Vec<DatasetRecord>; 3],
}

impl GeneratedDataset {
    pub fn split(&self, name: &str) -> Option<&[DatasetRecord]> {
        SPLITS
            .iter()
            .position(|s| *s == name)
            .map(|i| self.splits[i].as_slice())
    }

    pub fn write(&self, dir: &Path) -> Result<(), SimError> {
        std::fs::create_dir_all(dir).map_err(|source| DatasetError::Io {
            path: dir.display().to_string(),
            source,
        })?;
        for (name, records) in SPLITS.iter().zip(&self.splits) {
            write_jsonl(&split_path(dir, name), records)?;
        }
        write_json(&dir.join("manifest.json"), &self.manifest)?;
        Ok(())
    }
}

/// Sessions per split: rounded shares, the test split takes the remainder.
fn split_counts(sessions: usize, ratios: [f64; 3]) -> [usize; 3] {
    let train = ((sessions as f64 * ratios[0]).round() as usize).min(sessions);
    let val = ((sessions as f64 * ratios[1]).round() as usize).min(sessions - train);
    let mut counts = [train, val, sessions - train - val];
    // small datasets still get every requested split, paid for by the largest
    if ratios.iter().filter(|&&r| r > 0.0).count() <= sessions {
        for k in 0..3 {
            if ratios[k] > 0.0 && counts[k] == 0 {
                let donor = (0..3).max_by_key(|&j| counts[j]).unwrap_or(0);
                counts[donor] -= 1;
                counts[k] += 1;
            }
        }
    }
    counts
}

fn session_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Unfiltered samples of one session.
fn generate_session(cfg: &SimConfig, seed: u64, index: usize, len: usize) -> Result<Vec<DatasetRecord>, SimError> {
    let mut rng = session_rng(seed, index as u64 + 1);
    let preset = &cfg.preset;
    let base_ego = draw_ego(preset, &mut rng);
    let session = format!("{}-s{index:05}", preset.name);
    (0..len)
        .map(|i| {
            let mut ego = base_ego;
            ego.speed = (ego.speed + rng.gen_range(-0.5..0.5)).max(0.0);
            let t_a = i as f64 * cfg.sample_period;
            let annotations = generate_scene(
                preset,
                cfg.fov_half_extent,
                cfg.max_objects,
                cfg.rejection_budget,
                &mut rng,
            )?;
            let frames = preset
                .sensors
                .iter()
                .map(|sm| simulate_sensor(&annotations, sm, ego, t_a, &mut rng))
                .collect();
            Ok(DatasetRecord {
                sample_id: format!("{session}-{i:03}"),
                session: session.clone(),
                t_a,
                ego,
                frames,
                annotations,
            })
        })
        .collect()
}

/// Generates, filters and splits a dataset. Byte-identical for identical
/// `(cfg, samples, seed)` regardless of thread count.
pub fn generate_dataset(cfg: &SimConfig, samples: usize, seed: u64) -> Result<GeneratedDataset, SimError> {
    cfg.validate()?;
    let n_sessions = samples.div_ceil(cfg.session_len);
    let sessions: Vec<Vec<DatasetRecord>> = (0..n_sessions)
        .into_par_iter()
        .map(|s| {
            let len = cfg.session_len.min(samples - s * cfg.session_len);
            generate_session(cfg, seed, s, len)
        })
        .collect::<Result<_, _>>()?;

    let mut order: Vec<usize> = (0..n_sessions).collect();
    order.shuffle(&mut session_rng(seed, 0));
    let counts = split_counts(n_sessions, cfg.split_ratios);
    let mut split_of = vec![0usize; n_sessions];
    let mut cursor = 0;
    for (split, &count) in counts.iter().enumerate() {
        for &s in &order[cursor..cursor + count] {
            split_of[s] = split;
        }
        cursor += count;
    }

    let mut splits: [Vec<DatasetRecord>; 3] = Default::default();
    let mut session_map = BTreeMap::new();
    for (s, mut records) in sessions.into_iter().enumerate() {
        if let Some(first) = records.first() {
            session_map.insert(first.session.clone(), SPLITS[split_of[s]].to_string());
        }
        for r in &mut records {
            apply_fov(r, cfg.fov_half_extent);
        }
        splits[split_of[s]].extend(records);
    }

    // calibrate on the training split only, then filter everything
    let thresholds = cfg.confidence_percentile.map(|q| {
        let source = if splits[0].is_empty() {
            splits.concat()
        } else {
            splits[0].clone()
        };
        calibrate_thresholds(&source, q)
    });
    if let Some(t) = &thresholds {
        for r in splits.iter_mut().flatten() {
            apply_confidence(r, t);
        }
    }

    let split_sizes = SPLITS
        .iter()
        .zip(&splits)
        .map(|(n, s)| (n.to_string(), s.len()))
        .collect();
    Ok(GeneratedDataset {
        manifest: DatasetManifest {
            domain: cfg.preset.name.clone(),
            seed,
            samples,
            config: cfg.clone(),
            sessions: session_map,
            split_sizes,
            thresholds,
            combined_from: vec![],
        },
        splits,
    })
}

/// Merges two datasets by keeping every second sample of each split, so the
/// result has the size of one input.
pub fn combine(a: &GeneratedDataset, b: &GeneratedDataset) -> GeneratedDataset {
    let mut splits: [Vec<DatasetRecord>; 3] = Default::default();
    for (i, out) in splits.iter_mut().enumerate() {
        out.extend(a.splits[i].iter().step_by(2).cloned());
        out.extend(b.splits[i].iter().step_by(2).cloned());
    }
    let mut sessions = a.manifest.sessions.clone();
    sessions.extend(b.manifest.sessions.clone());
    let split_sizes = SPLITS
        .iter()
        .zip(&splits)
        .map(|(n, s)| (n.to_string(), s.len()))
        .collect();
    GeneratedDataset {
        manifest: DatasetManifest {
            domain: "combined".into(),
            seed: a.manifest.seed,
            samples: splits.iter().map(Vec::len).sum(),
            config: a.manifest.config.clone(),
            sessions,
            split_sizes,
            thresholds: a.manifest.thresholds,
            combined_from: vec![a.manifest.domain.clone(), b.manifest.domain.clone()],
        },
        splits,
    }
}

/// Reads the split files and manifest written by [`GeneratedDataset::write`].
pub fn read_dataset(dir: &Path) -> Result<GeneratedDataset, SimError> {
    let manifest = crate::dataset::read_json(&dir.join("manifest.json"))?;
    let mut splits: [Vec<DatasetRecord>; 3] = Default::default();
    for (name, out) in SPLITS.iter().zip(splits.iter_mut()) {
        *out = crate::dataset::read_jsonl(&split_path(dir, name))?;
    }
    Ok(GeneratedDataset { manifest, splits })
}
