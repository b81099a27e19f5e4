//! Cross-implementation parity fixtures.
//!
//! A fixture holds a few samples and the expected raw outputs of every slot
//! (`[x, y, l, w, psi]` and the logits). The training tools write fixtures
//! from their own forward pass; [`check_parity`] replays them here.

use hilo_fusion_core::hilo::{HiloError, HiloModel};
use hilo_fusion_core::SampleBuffer;
use serde::{Deserialize, Serialize};

pub const DEFAULT_PARITY_TOLERANCE: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlotOutput {
    #[serde(rename = "box")]
    pub bbox: [f64; 5],
    pub logits: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParityFixture {
    /// SHA-256 of the weight file the outputs were produced with.
    #[serde(default)]
    pub weights_sha256: Option<String>,
    pub samples: Vec<SampleBuffer>,
    /// One list of `n_queries` slots per sample.
    pub expected: Vec<Vec<SlotOutput>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParityReport {
    pub samples: usize,
    pub max_abs_error: f64,
    /// `(sample, slot, field)` of the largest error; field 0..5 is the box,
    /// 5.. the logits.
    pub worst: Option<(usize, usize, usize)>,
    pub tolerance: f64,
    pub passed: bool,
}

fn slots(model: &HiloModel, buf: &SampleBuffer) -> Result<Vec<SlotOutput>, HiloError> {
    Ok(model
        .forward(buf)?
        .iter()
        .map(|s| SlotOutput {
            bbox: s.bbox(),
            logits: s.logits.iter().map(|&v| v as f64).collect(),
        })
        .collect())
}

/// Runs the model on `samples` and records its outputs as a fixture.
pub fn export_fixture(
    model: &HiloModel,
    samples: Vec<SampleBuffer>,
    weights_sha256: Option<String>,
) -> Result<ParityFixture, HiloError> {
    let expected = samples.iter().map(|s| slots(model, s)).collect::<Result<_, _>>()?;
    Ok(ParityFixture {
        weights_sha256,
        samples,
        expected,
    })
}

fn angle_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(std::f64::consts::TAU);
    d.min(std::f64::consts::TAU - d)
}

/// Compares the model against a fixture. A slot-count or logit-count
/// mismatch counts as an infinite error.
pub fn check_parity(model: &HiloModel, fixture: &ParityFixture, tolerance: f64) -> Result<ParityReport, HiloError> {
    let mut max = 0.0f64;
    let mut worst = None;
    let mut bump = |err: f64, at: (usize, usize, usize)| {
        if err > max || err.is_nan() {
            max = if err.is_nan() { f64::INFINITY } else { err };
            worst = Some(at);
        }
    };
    if fixture.samples.len() != fixture.expected.len() {
        bump(f64::INFINITY, (0, 0, 0));
    }
    for (i, (buf, expected)) in fixture.samples.iter().zip(&fixture.expected).enumerate() {
        let got = slots(model, buf)?;
        if got.len() != expected.len() {
            bump(f64::INFINITY, (i, 0, 0));
            continue;
        }
        for (n, (g, e)) in got.iter().zip(expected).enumerate() {
            for k in 0..5 {
                let err = if k == 4 {
                    angle_diff(g.bbox[k], e.bbox[k])
                } else {
                    (g.bbox[k] - e.bbox[k]).abs()
                };
                bump(err, (i, n, k));
            }
            if g.logits.len() != e.logits.len() {
                bump(f64::INFINITY, (i, n, 5));
                continue;
            }
            for (k, (a, b)) in g.logits.iter().zip(&e.logits).enumerate() {
                bump((a - b).abs(), (i, n, 5 + k));
            }
        }
    }
    Ok(ParityReport {
        samples: fixture.samples.len(),
        max_abs_error: max,
        worst,
        tolerance,
        passed: max <= tolerance,
    })
}
