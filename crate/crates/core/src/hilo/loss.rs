//! Set-prediction matching cost and fusion loss (forward values only).

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::model::FusedEstimate;
use super::HiloError;
use crate::assignment::{hungarian_assign, CostMatrix};
use crate::geometry::giou_loss;
use crate::math;
use crate::object::{ClassLabel, ObjectState};

/// Cost weights for matching, loss weights for training, class weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LossWeights {
    pub match_cls: f64,
    pub match_box: f64,
    pub match_giou: f64,
    pub fusion_cls: f64,
    pub fusion_box: f64,
    pub fusion_giou: f64,
    pub fusion_orient: f64,
    /// Cross-entropy weight per object class.
    pub class_weights: Vec<f64>,
    /// Cross-entropy weight of the no-object class.
    pub no_object_weight: f64,
    /// Effective-number-of-samples beta used to derive `class_weights`.
    pub ens_beta: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            match_cls: 1.0,
            match_box: 1.0,
            match_giou: 1.0,
            fusion_cls: 2.0,
            fusion_box: 1.0,
            fusion_giou: 1.0,
            fusion_orient: 1.0,
            class_weights: vec![1.0; ClassLabel::COUNT],
            no_object_weight: 0.1,
            ens_beta: 0.99,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<(), HiloError> {
        let scalars = [
            self.match_cls,
            self.match_box,
            self.match_giou,
            self.fusion_cls,
            self.fusion_box,
            self.fusion_giou,
            self.fusion_orient,
            self.no_object_weight,
        ];
        if scalars
            .iter()
            .chain(&self.class_weights)
            .any(|w| !(w.is_finite() && *w >= 0.0))
        {
            return Err(HiloError::InvalidLossWeights);
        }
        Ok(())
    }

    fn class_weight(&self, cls: ClassLabel) -> f64 {
        self.class_weights.get(cls.index()).copied().unwrap_or(1.0)
    }
}

/// Sum of absolute differences over `[x, y, l, w]`.
pub fn box_l1(annotation: &ObjectState, est: &FusedEstimate) -> f64 {
    let b = est.bbox();
    math::abs(annotation.x - b[0])
        + math::abs(annotation.y - b[1])
        + math::abs(annotation.l - b[2])
        + math::abs(annotation.w - b[3])
}

/// `1 - cos(psi_g - psi_hat)`
pub fn orientation_loss(psi_annotation: f64, psi_estimate: f64) -> f64 {
    1.0 - math::cos(psi_annotation - psi_estimate)
}

/// Softmax cross-entropy of `logits` against `target`, in f64.
pub fn cross_entropy(logits: &[f32], target: usize) -> f64 {
    let max = logits.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v as f64));
    let lse = max + math::ln(logits.iter().map(|&v| math::exp(v as f64 - max)).sum::<f64>());
    lse - logits[target] as f64
}

/// Matching cost of pairing an annotation with an estimate:
/// `-w_cls * logit[c_g] + w_box * L1 + w_giou * (1 - gIoU)`.
pub fn matching_cost(annotation: &ObjectState, est: &FusedEstimate, lw: &LossWeights) -> f64 {
    let logit = est.logits.get(annotation.cls.index()).copied().unwrap_or(0.0) as f64;
    -lw.match_cls * logit
        + lw.match_box * box_l1(annotation, est)
        + lw.match_giou * giou_loss(&annotation.aabb(), &est.aabb())
}

/// Optimal one-to-one pairing of annotations with estimate slots.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SlotMatching {
    /// `(annotation index, estimate index)`, ordered by annotation.
    pub pairs: Vec<(usize, usize)>,
    /// Estimate slots without an annotation; their target is no-object.
    pub unmatched: Vec<usize>,
}

pub fn hungarian_match_sample(
    annotations: &[ObjectState],
    estimates: &[FusedEstimate],
    lw: &LossWeights,
) -> Result<SlotMatching, HiloError> {
    let g = annotations.len();
    let n = estimates.len();
    if g > n {
        return Err(HiloError::TooManyAnnotations {
            annotations: g,
            slots: n,
        });
    }
    let mut data = Vec::with_capacity(g * n);
    for a in annotations {
        for e in estimates {
            data.push(matching_cost(a, e, lw));
        }
    }
    let costs = CostMatrix::new(g, n, data)?;
    let assignment = hungarian_assign(&costs)?;
    let pairs: Vec<(usize, usize)> = (0..g).map(|a| (a, assignment.col(a))).collect();
    let mut taken = vec![false; n];
    for &(_, e) in &pairs {
        taken[e] = true;
    }
    let unmatched = (0..n).filter(|&e| !taken[e]).collect();
    Ok(SlotMatching { pairs, unmatched })
}

/// Per-term breakdown of the fusion loss, each already weighted and
/// averaged over slots; `total` is their sum.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub total: f64,
    pub class: f64,
    pub box_l1: f64,
    pub giou: f64,
    pub orientation: f64,
}

/// Fusion loss of one sample, averaged over all slots.
///
/// Matched slots pay weighted cross-entropy against the annotation class
/// plus box L1, gIoU and orientation terms. Unmatched slots pay only
/// cross-entropy against the no-object class.
pub fn fusion_loss(
    annotations: &[ObjectState],
    estimates: &[FusedEstimate],
    matching: &SlotMatching,
    lw: &LossWeights,
) -> LossBreakdown {
    let mut out = LossBreakdown::default();
    for &(g, n) in &matching.pairs {
        let a = &annotations[g];
        let e = &estimates[n];
        out.class += lw.fusion_cls * lw.class_weight(a.cls) * cross_entropy(&e.logits, a.cls.index());
        out.box_l1 += lw.fusion_box * box_l1(a, e);
        out.giou += lw.fusion_giou * giou_loss(&a.aabb(), &e.aabb());
        out.orientation += lw.fusion_orient * orientation_loss(a.psi, e.psi as f64);
    }
    for &n in &matching.unmatched {
        let e = &estimates[n];
        out.class += lw.fusion_cls * lw.no_object_weight * cross_entropy(&e.logits, e.logits.len() - 1);
    }
    let slots = estimates.len().max(1) as f64;
    out.class /= slots;
    out.box_l1 /= slots;
    out.giou /= slots;
    out.orientation /= slots;
    out.total = out.class + out.box_l1 + out.giou + out.orientation;
    out
}

/// Class-balanced weights from the effective number of samples:
/// `w_c ~ (1 - beta) / (1 - beta^n_c)`, normalized to mean one.
pub fn ens_class_weights(class_counts: &[u64], beta: f64) -> Result<Vec<f64>, HiloError> {
    if !(0.0..1.0).contains(&beta) {
        return Err(HiloError::InvalidEnsBeta(beta));
    }
    if class_counts.is_empty() || class_counts.contains(&0) {
        return Err(HiloError::EmptyClassCount);
    }
    let raw: Vec<f64> = class_counts
        .iter()
        .map(|&n| (1.0 - beta) / (1.0 - math::powf(beta, n as f64)))
        .collect();
    let mean = raw.iter().sum::<f64>() / raw.len() as f64;
    Ok(raw.into_iter().map(|w| w / mean).collect())
}
