use alloc::vec::Vec;

use super::{AkfError, PipelineConfig};
use crate::assignment::{auction_assign, augment_for_birth, chi2_ppf, Assignment, CostMatrix, FORBIDDEN};
use crate::frame::SensorFrame;
use crate::geometry::{inflate_box, wrap};
use crate::object::{StateDim, StateEstimate};

/// Squared Mahalanobis distance over the selected components using the sum
/// of both diagonal covariances. Yaw residuals are wrapped first.
pub fn mahalanobis_sq(pred: &StateEstimate, meas: &StateEstimate, dims: &[StateDim]) -> Result<f64, AkfError> {
    if dims.is_empty() {
        return Err(AkfError::EmptyDims);
    }
    let a = pred.state.kinematics();
    let b = meas.state.kinematics();
    let mut d2 = 0.0;
    for &dim in dims {
        let i = dim.index();
        let var = pred.cov.0[i] + meas.cov.0[i];
        if !(var > 0.0) {
            return Err(AkfError::ZeroVariance(dim));
        }
        let mut r = b[i] - a[i];
        if dim.is_angle() {
            r = wrap(r);
        }
        d2 += r * r / var;
    }
    Ok(d2)
}

/// Gate threshold for the configured association dims.
pub(crate) fn gate_for(cfg: &PipelineConfig) -> Result<f64, AkfError> {
    Ok(chi2_ppf(1.0 - cfg.alpha, cfg.dims().len() as u32)?)
}

/// Associates one frame with the (already predicted) global objects.
///
/// Returns one target per detection: an existing global index or birth.
pub fn associate(frame: &SensorFrame, globals: &[StateEstimate], cfg: &PipelineConfig) -> Result<Assignment, AkfError> {
    let gate = gate_for(cfg)?;
    associate_with_gate(&frame.objects, globals, cfg, &cfg.dims(), gate)
}

/// [`associate`] with a precomputed gate and dim list.
pub fn associate_with_gate(
    detections: &[StateEstimate],
    globals: &[StateEstimate],
    cfg: &PipelineConfig,
    dims: &[StateDim],
    gate: f64,
) -> Result<Assignment, AkfError> {
    let k = detections.len();
    let n = globals.len();
    let global_boxes: Vec<_> = globals
        .iter()
        .map(|g| inflate_box(&g.state.aabb(), &g.cov, cfg.kappa))
        .collect();
    let mut costs = CostMatrix::filled(k, n, FORBIDDEN);
    for (r, det) in detections.iter().enumerate() {
        let det_box = inflate_box(&det.state.aabb(), &det.cov, cfg.kappa);
        for (c, (g, g_box)) in globals.iter().zip(&global_boxes).enumerate() {
            if det_box.overlaps(g_box) {
                costs.set(r, c, mahalanobis_sq(g, det, dims)?);
            }
        }
    }
    let augmented = augment_for_birth(&costs, gate)?;
    Ok(auction_assign(&augmented, cfg.epsilon)?)
}
