//! Object-level multi-sensor fusion primitives.
//!
//! The crate is `no_std` and only needs an allocator. It contains everything
//! that is pure computation:
//!
//! * [`object`] and [`geometry`]: the shared object model and box geometry.
//! * [`assignment`]: Hungarian and auction solvers and the chi-squared gate.
//! * [`akf`]: the Kalman-filter fusion pipeline (AKF and AKFA).
//! * [`hilo`]: transformer fusion inference plus its matching cost and loss.
//! * [`eval`]: detection metrics (F1, precision, recall, class precision, mIoU).
//!
//! File formats, the scenario simulator and the command line live in the
//! `hilo-fusion` companion crate.
#![no_std]
// `!(x > 0.0)` is used on purpose: it rejects NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod akf;
pub mod assignment;
pub mod eval;
pub mod frame;
pub mod geometry;
pub mod hilo;
pub(crate) mod math;
pub mod object;

pub use frame::{EgoMotion, SampleBuffer, SensorFrame, SensorId, SensorKind};
pub use geometry::{aabb_iou, giou_loss, inflate_box, wrap_angle, Aabb, GeometryError};
pub use object::{ClassLabel, DiagCovariance, ObjectState, StateDim, StateEstimate};
