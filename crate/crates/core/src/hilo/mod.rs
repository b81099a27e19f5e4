//! Transformer fusion inference.
//!
//! Every detection of a sample becomes one token (its fields, a sinusoidal
//! position encoding, sensor one-hot and age, passed through an MLP). A
//! pre-norm encoder applies self-attention across all tokens; a decoder
//! cross-attends from a fixed bank of learnable queries, and per-slot heads
//! produce a box `[x, y, l, w, psi]` and `n_classes + 1` logits, the last
//! being "no object". The model always returns one estimate per query.
//!
//! The matching cost and fusion loss used for training are provided as
//! forward values so that both training and tests share one definition.

mod hyper;
mod loss;
mod model;
pub mod nn;
mod weights;

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

pub use hyper::{default_layout, HiloHyperParams, InputField, BOX_HEAD_OUTPUTS, POS_ENC_DIM};
pub use loss::{
    box_l1, cross_entropy, ens_class_weights, fusion_loss, hungarian_match_sample, matching_cost, orientation_loss,
    LossBreakdown, LossWeights, SlotMatching,
};
pub use model::{
    detection_features, embed_detections, hilo_forward, position_encode, sample_features, FusedEstimate, HiloModel,
    MIN_EXTENT,
};
pub use weights::{manifest, HiloWeights, Tensor};

use crate::assignment::AssignmentError;

#[derive(Clone, Debug, PartialEq)]
pub enum HiloError {
    InvalidHyperParams(&'static str),
    MissingTensor(String),
    UnexpectedTensor(String),
    Shape {
        name: String,
        expected: Vec<usize>,
        found: Vec<usize>,
    },
    LayoutMismatch(String),
    NonFinite {
        layer: String,
    },
    TooManyAnnotations {
        annotations: usize,
        slots: usize,
    },
    InvalidLossWeights,
    InvalidEnsBeta(f64),
    EmptyClassCount,
    Assignment(AssignmentError),
}

impl fmt::Display for HiloError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HiloError::InvalidHyperParams(why) => write!(f, "invalid hyperparameters: {why}"),
            HiloError::MissingTensor(n) => write!(f, "missing tensor {n}"),
            HiloError::UnexpectedTensor(n) => write!(f, "unexpected tensor {n}"),
            HiloError::Shape { name, expected, found } => {
                write!(f, "tensor {name}: expected shape {expected:?}, found {found:?}")
            }
            HiloError::LayoutMismatch(why) => write!(f, "input layout mismatch: {why}"),
            HiloError::NonFinite { layer } => write!(f, "non-finite activation after {layer}"),
            HiloError::TooManyAnnotations { annotations, slots } => {
                write!(f, "{annotations} annotations exceed {slots} output slots")
            }
            HiloError::InvalidLossWeights => f.write_str("loss weights must be finite and non-negative"),
            HiloError::InvalidEnsBeta(b) => write!(f, "ENS beta {b} outside [0, 1)"),
            HiloError::EmptyClassCount => f.write_str("class counts must be non-empty and >= 1"),
            HiloError::Assignment(e) => write!(f, "matching failed: {e}"),
        }
    }
}

impl core::error::Error for HiloError {}

impl From<AssignmentError> for HiloError {
    fn from(e: AssignmentError) -> Self {
        HiloError::Assignment(e)
    }
}
