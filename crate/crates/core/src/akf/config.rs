use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::AkfError;
use crate::frame::{PerKind, PerSensor};
use crate::object::{DiagCovariance, StateDim};

/// Fusion method selector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Akf,
    Akfa,
    Hilo,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Akf => "akf",
            Method::Akfa => "akfa",
            Method::Hilo => "hilo",
        }
    }
}

/// All tunable scalars of the Kalman fusion path.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// Significance level of the birth gate.
    pub alpha: f64,
    /// Final auction slackness.
    pub epsilon: f64,
    /// Process noise per second for `[x, y, l, w, vx, vy, psi]`.
    pub q_diag: [f64; StateDim::COUNT],
    /// Extra measurement covariance per sensor type. All zero is plain AKF.
    pub extra_meas_cov: PerKind<DiagCovariance>,
    /// Components entering the Mahalanobis distance; also the gate's
    /// degrees of freedom.
    pub assoc_dims: Vec<StateDim>,
    /// Detections with an existence score below this are dropped.
    pub existence_thresholds: PerSensor<f64>,
    /// Fused objects with an existence score below this are not reported.
    pub output_conf_threshold: f64,
    /// Standard deviations used to inflate boxes for the overlap test.
    pub kappa: f64,
    pub ego_compensation: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            epsilon: 0.01,
            q_diag: [0.5, 0.5, 0.05, 0.05, 2.0, 2.0, 0.1],
            extra_meas_cov: PerKind::splat(DiagCovariance::zeros()),
            assoc_dims: vec![StateDim::X, StateDim::Y, StateDim::Vx, StateDim::Vy],
            existence_thresholds: PerSensor::splat(0.0),
            output_conf_threshold: 0.0,
            kappa: 1.0,
            ego_compensation: true,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), AkfError> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(AkfError::InvalidConfig("alpha must lie in (0, 1)"));
        }
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(AkfError::InvalidConfig("epsilon must be positive"));
        }
        if self.q_diag.iter().any(|q| !(q.is_finite() && *q >= 0.0)) {
            return Err(AkfError::InvalidConfig("process noise must be non-negative"));
        }
        if self.extra_meas_cov.camera.validate().is_err() || self.extra_meas_cov.radar.validate().is_err() {
            return Err(AkfError::InvalidConfig("extra covariance must be non-negative"));
        }
        if self.assoc_dims.is_empty() {
            return Err(AkfError::EmptyDims);
        }
        if !(self.kappa >= 0.0) {
            return Err(AkfError::InvalidConfig("kappa must be non-negative"));
        }
        Ok(())
    }

    /// True when any extra measurement covariance is configured.
    pub fn is_akfa(&self) -> bool {
        !(self.extra_meas_cov.camera.is_zero() && self.extra_meas_cov.radar.is_zero())
    }

    /// Distinct association dims in canonical order.
    pub(crate) fn dims(&self) -> Vec<StateDim> {
        let mut d = self.assoc_dims.clone();
        d.sort();
        d.dedup();
        d
    }
}
