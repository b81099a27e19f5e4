use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::hyper::{HiloHyperParams, InputField, BOX_HEAD_OUTPUTS, POS_ENC_DIM};
use super::nn::{FeedForward, LayerNorm, Linear, Mat, MultiHeadAttention};
use super::weights::HiloWeights;
use super::HiloError;
use crate::frame::SampleBuffer;
use crate::geometry::Aabb;
use crate::math::{self, atan2f, TAU};
use crate::object::{ClassLabel, ObjectState};

/// Smallest extent used when turning an estimate into a box.
pub const MIN_EXTENT: f64 = 1e-3;

/// Sinusoidal encoding of a position at two spatial frequencies:
/// `[sin(2 pi f x), cos(2 pi f x), sin(2 pi f y), cos(2 pi f y)]` per frequency.
pub fn position_encode(x: f64, y: f64, freqs: [f64; 2]) -> [f64; POS_ENC_DIM] {
    let mut out = [0.0; POS_ENC_DIM];
    for (k, f) in freqs.iter().enumerate() {
        let ax = TAU * f * x;
        let ay = TAU * f * y;
        out[4 * k] = math::sin(ax);
        out[4 * k + 1] = math::cos(ax);
        out[4 * k + 2] = math::sin(ay);
        out[4 * k + 3] = math::cos(ay);
    }
    out
}

/// Raw input vector of one detection, per the layout, followed by the
/// position encoding.
pub fn detection_features(
    state: &ObjectState,
    sensor: crate::frame::SensorId,
    age: f64,
    hp: &HiloHyperParams,
) -> Result<Vec<f32>, HiloError> {
    let mut v: Vec<f32> = Vec::with_capacity(hp.input_dim());
    for field in &hp.input_layout {
        match field {
            InputField::X => v.push(state.x as f32),
            InputField::Y => v.push(state.y as f32),
            InputField::L => v.push(state.l as f32),
            InputField::W => v.push(state.w as f32),
            InputField::Vx => v.push(state.vx as f32),
            InputField::Vy => v.push(state.vy as f32),
            InputField::SinPsi => v.push(math::sin(state.psi) as f32),
            InputField::CosPsi => v.push(math::cos(state.psi) as f32),
            InputField::ExistenceScore => v.push(state.s_e as f32),
            InputField::ClassScore => v.push(state.s_c as f32),
            InputField::ClassOneHot => {
                let idx = state.cls.index();
                if idx >= hp.n_classes {
                    return Err(HiloError::LayoutMismatch(format!(
                        "class {} has no slot among {} model classes",
                        state.cls, hp.n_classes
                    )));
                }
                v.extend((0..hp.n_classes).map(|c| if c == idx { 1.0 } else { 0.0 }));
            }
            InputField::SensorOneHot => {
                let idx = sensor.index();
                v.extend((0..crate::frame::SensorId::COUNT).map(|c| if c == idx { 1.0 } else { 0.0 }));
            }
            InputField::Age => v.push(age as f32),
        }
    }
    v.extend(
        position_encode(state.x, state.y, hp.pos_freqs)
            .iter()
            .map(|&p| p as f32),
    );
    Ok(v)
}

/// Feature rows of every detection in the buffer, in frame order.
pub fn sample_features(buf: &SampleBuffer, hp: &HiloHyperParams) -> Result<Vec<Vec<f32>>, HiloError> {
    let mut rows = Vec::with_capacity(buf.detection_count());
    for frame in &buf.frames {
        let age = buf.t_a - frame.arrival_time;
        for obj in &frame.objects {
            rows.push(detection_features(&obj.state, frame.sensor, age, hp)?);
        }
    }
    Ok(rows)
}

/// One output slot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FusedEstimate {
    pub x: f32,
    pub y: f32,
    pub l: f32,
    pub w: f32,
    pub psi: f32,
    /// `n_classes + 1` logits; the last one is "no object".
    pub logits: Vec<f32>,
    /// Argmax over the logits.
    pub class_index: usize,
    /// Softmax probability of the argmax class.
    pub confidence: f32,
}

impl FusedEstimate {
    pub fn is_no_object(&self) -> bool {
        self.class_index + 1 == self.logits.len()
    }

    pub fn class_label(&self) -> Option<ClassLabel> {
        if self.is_no_object() {
            None
        } else {
            ClassLabel::from_index(self.class_index)
        }
    }

    pub fn bbox(&self) -> [f64; 5] {
        [
            self.x as f64,
            self.y as f64,
            self.l as f64,
            self.w as f64,
            self.psi as f64,
        ]
    }

    pub fn aabb(&self) -> Aabb {
        Aabb {
            cx: self.x as f64,
            cy: self.y as f64,
            l: (self.l as f64).max(MIN_EXTENT),
            w: (self.w as f64).max(MIN_EXTENT),
        }
    }

    /// Converts an object slot into an `ObjectState` (velocity zero, score
    /// equal to the confidence). `None` for no-object slots.
    pub fn to_object(&self) -> Option<ObjectState> {
        let cls = self.class_label()?;
        let b = self.aabb();
        Some(ObjectState {
            x: b.cx,
            y: b.cy,
            l: b.l,
            w: b.w,
            vx: 0.0,
            vy: 0.0,
            psi: crate::geometry::wrap(self.psi as f64),
            cls,
            s_e: self.confidence as f64,
            s_c: self.confidence as f64,
        })
    }
}

#[derive(Clone, Debug)]
struct Block {
    attn: MultiHeadAttention,
    ff: FeedForward,
    norm1: LayerNorm,
    norm2: LayerNorm,
}

impl Block {
    fn load(w: &HiloWeights, hp: &HiloHyperParams, prefix: &str, attn: &str) -> Result<Self, HiloError> {
        let d = hp.d_model;
        Ok(Self {
            attn: MultiHeadAttention::load(w, &format!("{prefix}.{attn}"), d, hp.n_heads)?,
            ff: FeedForward {
                linear1: Linear::load(w, &format!("{prefix}.linear1"), d, hp.ff_dim)?,
                linear2: Linear::load(w, &format!("{prefix}.linear2"), hp.ff_dim, d)?,
            },
            norm1: LayerNorm::load(w, &format!("{prefix}.norm1"))?,
            norm2: LayerNorm::load(w, &format!("{prefix}.norm2"))?,
        })
    }

    /// Pre-norm residual block. Keys and values come from `memory`, or from
    /// the normalized input itself when `memory` is `None`.
    fn forward(&self, x: &mut Mat, memory: Option<&Mat>) {
        let normed = self.norm1.forward(x);
        let attended = self.attn.forward(&normed, memory.unwrap_or(&normed));
        x.add_assign(&attended);
        let ff = self.ff.forward(&self.norm2.forward(x));
        x.add_assign(&ff);
    }
}

/// Validated weights unpacked into layers, ready for inference.
///
/// Immutable after construction; share it freely between threads.
#[derive(Clone, Debug)]
pub struct HiloModel {
    hp: HiloHyperParams,
    input1: Linear,
    input2: Linear,
    null_token: Mat,
    encoder: Vec<Block>,
    encoder_norm: LayerNorm,
    decoder: Vec<Block>,
    decoder_norm: LayerNorm,
    queries: Mat,
    box1: Linear,
    box2: Linear,
    class_head: Linear,
    param_count: usize,
}

fn check(m: &Mat, layer: &str) -> Result<(), HiloError> {
    if m.all_finite() {
        Ok(())
    } else {
        Err(HiloError::NonFinite { layer: layer.into() })
    }
}

impl HiloModel {
    pub fn new(hp: HiloHyperParams, w: &HiloWeights) -> Result<Self, HiloError> {
        let param_count = w.validate(&hp)?;
        let d = hp.d_model;
        let tensor = |name: &str| {
            w.get(name)
                .map(|t| t.data.clone())
                .ok_or_else(|| HiloError::MissingTensor(name.into()))
        };
        let encoder = (0..hp.n_enc_layers)
            .map(|i| Block::load(w, &hp, &format!("encoder.layers.{i}"), "self_attn"))
            .collect::<Result<Vec<_>, _>>()?;
        let decoder = (0..hp.n_dec_layers)
            .map(|i| Block::load(w, &hp, &format!("decoder.layers.{i}"), "cross_attn"))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            input1: Linear::load(w, "input_mlp.0", hp.input_dim(), d)?,
            input2: Linear::load(w, "input_mlp.2", d, d)?,
            null_token: Mat::from_vec(1, d, tensor("null_token")?),
            encoder,
            encoder_norm: LayerNorm::load(w, "encoder.norm")?,
            decoder,
            decoder_norm: LayerNorm::load(w, "decoder.norm")?,
            queries: Mat::from_vec(hp.n_queries, d, tensor("query_embed")?),
            box1: Linear::load(w, "box_head.0", d, d)?,
            box2: Linear::load(w, "box_head.2", d, BOX_HEAD_OUTPUTS)?,
            class_head: Linear::load(w, "class_head", d, hp.n_classes + 1)?,
            param_count,
            hp,
        })
    }

    pub fn hyper_params(&self) -> &HiloHyperParams {
        &self.hp
    }

    pub fn param_count(&self) -> usize {
        self.param_count
    }

    fn mlp(&self, features: &Mat) -> Mat {
        self.input2.forward(&self.input1.forward(features).relu())
    }

    /// Token features (`K x d_model`) in frame order. `K = 0` yields an
    /// empty matrix; [`HiloModel::forward`] substitutes the null token then.
    pub fn embed(&self, buf: &SampleBuffer) -> Result<Mat, HiloError> {
        let rows = sample_features(buf, &self.hp)?;
        let k = rows.len();
        let flat: Vec<f32> = rows.into_iter().flatten().collect();
        Ok(self.mlp(&Mat::from_vec(k, self.hp.input_dim(), flat)))
    }

    /// Runs the full network and returns exactly `n_queries` estimates.
    ///
    /// Detections are put into a canonical order before encoding, so the
    /// output is bit-identical under any permutation of the input.
    pub fn forward(&self, buf: &SampleBuffer) -> Result<Vec<FusedEstimate>, HiloError> {
        let mut rows = sample_features(buf, &self.hp)?;
        rows.sort_by(|a, b| {
            a.iter()
                .zip(b.iter())
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(core::cmp::Ordering::Equal)
        });

        let mut tokens = if rows.is_empty() {
            self.null_token.clone()
        } else {
            let k = rows.len();
            let flat: Vec<f32> = rows.into_iter().flatten().collect();
            let t = self.mlp(&Mat::from_vec(k, self.hp.input_dim(), flat));
            check(&t, "input_mlp")?;
            t
        };

        for (i, block) in self.encoder.iter().enumerate() {
            block.forward(&mut tokens, None);
            check(&tokens, &format!("encoder.layers.{i}"))?;
        }
        let memory = self.encoder_norm.forward(&tokens);
        check(&memory, "encoder.norm")?;

        let mut slots = self.queries.clone();
        for (i, block) in self.decoder.iter().enumerate() {
            block.forward(&mut slots, Some(&memory));
            check(&slots, &format!("decoder.layers.{i}"))?;
        }
        let fused = self.decoder_norm.forward(&slots);
        check(&fused, "decoder.norm")?;

        let boxes = self.box2.forward(&self.box1.forward(&fused).relu());
        check(&boxes, "box_head")?;
        let logits = self.class_head.forward(&fused);
        check(&logits, "class_head")?;

        Ok((0..self.hp.n_queries)
            .map(|n| decode_slot(boxes.row(n), logits.row(n)))
            .collect())
    }
}

fn softplus(x: f32) -> f32 {
    if x > 20.0 {
        x
    } else {
        libm::log1pf(math::expf(x))
    }
}

fn decode_slot(raw_box: &[f32], logits: &[f32]) -> FusedEstimate {
    let (mut best, mut best_v) = (0usize, f32::NEG_INFINITY);
    for (i, &v) in logits.iter().enumerate() {
        if v > best_v {
            best = i;
            best_v = v;
        }
    }
    let denom: f32 = logits.iter().map(|&v| math::expf(v - best_v)).sum();
    FusedEstimate {
        x: raw_box[0],
        y: raw_box[1],
        l: softplus(raw_box[2]),
        w: softplus(raw_box[3]),
        psi: atan2f(raw_box[4], raw_box[5]),
        logits: logits.to_vec(),
        class_index: best,
        confidence: 1.0 / denom,
    }
}

/// Token features for a sample; see [`HiloModel::embed`].
pub fn embed_detections(buf: &SampleBuffer, hp: &HiloHyperParams, w: &HiloWeights) -> Result<Mat, HiloError> {
    HiloModel::new(hp.clone(), w)?.embed(buf)
}

/// One-shot forward pass. Build a [`HiloModel`] once when running many
/// samples.
pub fn hilo_forward(
    buf: &SampleBuffer,
    hp: &HiloHyperParams,
    w: &HiloWeights,
) -> Result<Vec<FusedEstimate>, HiloError> {
    HiloModel::new(hp.clone(), w)?.forward(buf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::{EgoMotion, SensorFrame, SensorId};
    use crate::object::{DiagCovariance, StateEstimate};
    use alloc::vec;

    fn buf(objects: Vec<ObjectState>) -> SampleBuffer {
        SampleBuffer {
            t_a: 0.04,
            ego: EgoMotion::default(),
            frames: vec![SensorFrame {
                sensor: SensorId::Camera,
                arrival_time: 0.01,
                objects: objects
                    .into_iter()
                    .map(|s| StateEstimate::new(s, DiagCovariance([1.0; 7])))
                    .collect(),
            }],
        }
    }

    fn pseudo_random(hp: &HiloHyperParams) -> HiloWeights {
        let mut state = 0x2545_f491_4f6c_dd1du64;
        HiloWeights::init_with(hp, |_, _| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            ((state >> 40) as f32 / (1u64 << 24) as f32 - 0.5) * 0.4
        })
    }

    #[test]
    fn position_encoding_examples() {
        let e = position_encode(0.0, 0.0, [0.005, 0.04]);
        for k in 0..2 {
            assert_eq!([e[4 * k], e[4 * k + 2]], [0.0, 0.0]);
            assert_eq!([e[4 * k + 1], e[4 * k + 3]], [1.0, 1.0]);
        }
        let e = position_encode(50.0, 0.0, [0.005, 0.04]);
        assert!((e[0] - 1.0).abs() < 1e-12 && e[1].abs() < 1e-12);

        let a = position_encode(13.0, -7.0, [0.005, 0.04]);
        let b = position_encode(13.0 + 200.0, -7.0, [0.005, 0.04]);
        assert!((a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-12);
    }

    #[test]
    fn embed_shapes_and_determinism() {
        let hp = HiloHyperParams::tiny();
        let w = pseudo_random(&hp);
        let o = ObjectState::at(10.0, 2.0);
        let t = embed_detections(&buf(vec![o, ObjectState::at(-5.0, 1.0), o]), &hp, &w).unwrap();
        assert_eq!((t.rows, t.cols), (3, hp.d_model));
        assert_eq!(t.row(0), t.row(2));
    }

    #[test]
    fn zero_mlp_gives_zero_tokens() {
        let hp = HiloHyperParams::tiny();
        let w = HiloWeights::zeros(&hp);
        let t = embed_detections(&buf(vec![ObjectState::at(10.0, 2.0)]), &hp, &w).unwrap();
        assert!(t.data.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn output_count_is_query_count() {
        let hp = HiloHyperParams::default();
        let w = pseudo_random(&hp);
        let model = HiloModel::new(hp.clone(), &w).unwrap();
        for n in [0, 1, 7] {
            let objs = (0..n).map(|i| ObjectState::at(i as f64 * 5.0, 0.0)).collect();
            let out = model.forward(&buf(objs)).unwrap();
            assert_eq!(out.len(), 20);
            assert!(out.iter().all(|e| e.logits.len() == 6 && e.l > 0.0 && e.w > 0.0));
        }
    }

    #[test]
    fn nan_weights_name_the_layer() {
        let hp = HiloHyperParams::tiny();
        let mut w = pseudo_random(&hp);
        w.get_mut("encoder.layers.0.linear2.bias").unwrap().data[0] = f32::NAN;
        let err = hilo_forward(&buf(vec![ObjectState::at(1.0, 1.0)]), &hp, &w).unwrap_err();
        assert_eq!(
            err,
            HiloError::NonFinite {
                layer: "encoder.layers.0".into()
            }
        );
    }

    #[test]
    fn class_outside_model_classes() {
        let hp = HiloHyperParams {
            n_classes: 2,
            ..HiloHyperParams::tiny()
        };
        let w = pseudo_random(&hp);
        let mut o = ObjectState::at(1.0, 1.0);
        o.cls = ClassLabel::Pedestrian;
        assert!(matches!(
            hilo_forward(&buf(vec![o]), &hp, &w),
            Err(HiloError::LayoutMismatch(_))
        ));
    }
}
