use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::HiloError;
use crate::frame::SensorId;
use crate::object::ClassLabel;

/// Width of the sinusoidal position encoding appended to every token.
pub const POS_ENC_DIM: usize = 8;

/// Raw outputs of the box head: x, y, l, w (pre-softplus), sin and cos of yaw.
pub const BOX_HEAD_OUTPUTS: usize = 6;

/// One entry of the per-detection input vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputField {
    X,
    Y,
    L,
    W,
    Vx,
    Vy,
    SinPsi,
    CosPsi,
    ExistenceScore,
    ClassScore,
    /// One-hot over the model's object classes.
    ClassOneHot,
    /// One-hot over the five sensors.
    SensorOneHot,
    /// Annotation time minus arrival time (s).
    Age,
}

impl InputField {
    pub fn width(self, n_classes: usize) -> usize {
        match self {
            InputField::ClassOneHot => n_classes,
            InputField::SensorOneHot => SensorId::COUNT,
            _ => 1,
        }
    }
}

/// Architecture description stored in every weight file header.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HiloHyperParams {
    pub d_model: usize,
    pub n_heads: usize,
    pub n_enc_layers: usize,
    pub n_dec_layers: usize,
    pub ff_dim: usize,
    /// Number of output slots (learnable queries).
    pub n_queries: usize,
    /// Object classes, not counting the no-object class.
    pub n_classes: usize,
    /// Position-encoding frequencies (1/m).
    pub pos_freqs: [f64; 2],
    pub input_layout: Vec<InputField>,
}

impl Default for HiloHyperParams {
    fn default() -> Self {
        Self {
            d_model: 64,
            n_heads: 4,
            n_enc_layers: 2,
            n_dec_layers: 2,
            ff_dim: 128,
            n_queries: 20,
            n_classes: ClassLabel::COUNT,
            pos_freqs: [1.0 / 200.0, 1.0 / 25.0],
            input_layout: default_layout(),
        }
    }
}

pub fn default_layout() -> Vec<InputField> {
    vec![
        InputField::X,
        InputField::Y,
        InputField::L,
        InputField::W,
        InputField::Vx,
        InputField::Vy,
        InputField::SinPsi,
        InputField::CosPsi,
        InputField::ExistenceScore,
        InputField::ClassScore,
        InputField::ClassOneHot,
        InputField::SensorOneHot,
        InputField::Age,
    ]
}

impl HiloHyperParams {
    /// Small configuration for tests and gradient checks.
    pub fn tiny() -> Self {
        Self {
            d_model: 8,
            n_heads: 2,
            n_enc_layers: 1,
            n_dec_layers: 1,
            ff_dim: 16,
            n_queries: 4,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), HiloError> {
        let bad = |why| Err(HiloError::InvalidHyperParams(why));
        if self.d_model == 0 || self.n_heads == 0 || !self.d_model.is_multiple_of(self.n_heads) {
            return bad("d_model must be a positive multiple of n_heads");
        }
        if self.ff_dim == 0 || self.n_queries == 0 {
            return bad("ff_dim and n_queries must be positive");
        }
        if self.n_classes == 0 || self.n_classes > ClassLabel::COUNT {
            return bad("n_classes must be between 1 and the number of known classes");
        }
        if self.input_layout.is_empty() {
            return bad("input layout is empty");
        }
        if self.pos_freqs.iter().any(|f| !f.is_finite()) {
            return bad("position frequencies must be finite");
        }
        Ok(())
    }

    /// Token input width: layout fields plus the position encoding.
    pub fn input_dim(&self) -> usize {
        self.input_layout.iter().map(|f| f.width(self.n_classes)).sum::<usize>() + POS_ENC_DIM
    }

    pub fn head_dim(&self) -> usize {
        self.d_model / self.n_heads
    }

    /// Index of the no-object logit.
    pub fn no_object_index(&self) -> usize {
        self.n_classes
    }
}
