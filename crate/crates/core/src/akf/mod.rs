//! Kalman-filter object fusion.
//!
//! Sensor frames of one sample are processed in arrival order. Each frame is
//! associated against the global object set (inflated-box overlap, then
//! Mahalanobis distance, auction assignment with a chi-squared birth gate)
//! and matched pairs are fused with a per-component Kalman update. Setting a
//! non-zero extra measurement covariance per sensor type turns plain AKF
//! into AKFA.
//!
//! The global object set lives only for the duration of one sample.

mod association;
mod config;
mod motion;
mod pipeline;
mod update;

use core::fmt;

pub use association::{associate, associate_with_gate, mahalanobis_sq};
pub use config::{Method, PipelineConfig};
pub use motion::{cv_predict, ego_compensate};
pub use pipeline::{fuse_sample, AkfFuser, UpdateTrace};
pub use update::akf_update;

use crate::assignment::AssignmentError;
use crate::object::StateDim;

#[derive(Clone, Debug, PartialEq)]
pub enum AkfError {
    /// Prior plus measurement variance vanished on a component.
    ZeroVariance(StateDim),
    EmptyDims,
    InvalidConfig(&'static str),
    Assignment(AssignmentError),
}

impl fmt::Display for AkfError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AkfError::ZeroVariance(d) => write!(f, "combined variance is zero on {d:?}"),
            AkfError::EmptyDims => f.write_str("association needs at least one state dimension"),
            AkfError::InvalidConfig(why) => write!(f, "invalid pipeline config: {why}"),
            AkfError::Assignment(e) => write!(f, "assignment failed: {e}"),
        }
    }
}

impl core::error::Error for AkfError {
    fn source(&self) -> Option<&(dyn core::error::Error + 'static)> {
        match self {
            AkfError::Assignment(e) => Some(e),
            _ => None,
        }
    }
}

impl From<AssignmentError> for AkfError {
    fn from(e: AssignmentError) -> Self {
        AkfError::Assignment(e)
    }
}
