//! Detection metrics accumulated over samples.
//!
//! Estimates are matched one-to-one to annotations greedily in descending
//! IoU order; a pair counts as a true positive at IoU >= threshold (0.5 by
//! default). Counts are summed over all samples before any ratio is taken.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::geometry::{aabb_iou, Aabb};
use crate::object::{ClassLabel, ObjectState};

pub const DEFAULT_IOU_THRESHOLD: f64 = 0.5;

/// A box with a class, the common shape of estimates and annotations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledBox {
    pub bbox: Aabb,
    pub cls: ClassLabel,
}

impl From<&ObjectState> for LabeledBox {
    fn from(o: &ObjectState) -> Self {
        Self {
            bbox: o.aabb(),
            cls: o.cls,
        }
    }
}

/// Outcome of matching one sample.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SampleMatch {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tc: u64,
    pub fc: u64,
    /// `(estimate, annotation, iou)` for every true positive.
    pub pairs: Vec<(usize, usize, f64)>,
}

impl SampleMatch {
    pub fn iou_sum(&self) -> f64 {
        self.pairs.iter().map(|p| p.2).sum()
    }
}

/// Greedy IoU-descending one-to-one matching. Ties go to the lower estimate
/// index, then the lower annotation index.
pub fn match_sample(estimates: &[LabeledBox], annotations: &[LabeledBox], iou_threshold: f64) -> SampleMatch {
    let mut candidates = Vec::new();
    for (e, est) in estimates.iter().enumerate() {
        for (a, ann) in annotations.iter().enumerate() {
            let iou = aabb_iou(&est.bbox, &ann.bbox);
            if iou >= iou_threshold && iou > 0.0 {
                candidates.push((e, a, iou));
            }
        }
    }
    candidates.sort_by(|x, y| y.2.total_cmp(&x.2).then(x.0.cmp(&y.0)).then(x.1.cmp(&y.1)));

    let mut est_used = alloc::vec![false; estimates.len()];
    let mut ann_used = alloc::vec![false; annotations.len()];
    let mut out = SampleMatch::default();
    for (e, a, iou) in candidates {
        if est_used[e] || ann_used[a] {
            continue;
        }
        est_used[e] = true;
        ann_used[a] = true;
        out.tp += 1;
        if estimates[e].cls == annotations[a].cls {
            out.tc += 1;
        } else {
            out.fc += 1;
        }
        out.pairs.push((e, a, iou));
    }
    out.fp = estimates.len() as u64 - out.tp;
    out.fn_ = annotations.len() as u64 - out.tp;
    out
}

/// Running totals. `tc + fc == tp` always holds.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalAccumulator {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tc: u64,
    pub fc: u64,
    /// Sum of IoU over true positives.
    pub iou_sum: f64,
}

impl EvalAccumulator {
    pub fn add(&mut self, m: &SampleMatch) {
        self.tp += m.tp;
        self.fp += m.fp;
        self.fn_ += m.fn_;
        self.tc += m.tc;
        self.fc += m.fc;
        self.iou_sum += m.iou_sum();
    }

    pub fn merge(&mut self, other: &EvalAccumulator) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
        self.tc += other.tc;
        self.fc += other.fc;
        self.iou_sum += other.iou_sum;
    }
}

/// Which ratios had an empty denominator and were reported as 0.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricFlags {
    pub no_true_positives: bool,
    pub no_estimates: bool,
    pub no_annotations: bool,
}

impl MetricFlags {
    pub fn any(&self) -> bool {
        self.no_true_positives || self.no_estimates || self.no_annotations
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
    pub class_precision: f64,
    pub miou: f64,
    pub flags: MetricFlags,
}

impl MetricReport {
    pub const NAMES: [&'static str; 5] = ["f1", "precision", "recall", "class_precision", "miou"];

    pub fn values(&self) -> [f64; 5] {
        [self.f1, self.precision, self.recall, self.class_precision, self.miou]
    }
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

pub fn compute_metrics(acc: &EvalAccumulator) -> MetricReport {
    let tp = acc.tp as f64;
    let fp = acc.fp as f64;
    let fn_ = acc.fn_ as f64;
    MetricReport {
        f1: ratio(2.0 * tp, 2.0 * tp + fp + fn_),
        precision: ratio(tp, tp + fp),
        recall: ratio(tp, tp + fn_),
        class_precision: ratio(acc.tc as f64, (acc.tc + acc.fc) as f64),
        miou: ratio(acc.iou_sum, tp),
        flags: MetricFlags {
            no_true_positives: acc.tp == 0,
            no_estimates: acc.tp + acc.fp == 0,
            no_annotations: acc.tp + acc.fn_ == 0,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn lb(cx: f64, cy: f64, cls: ClassLabel) -> LabeledBox {
        LabeledBox {
            bbox: Aabb::new(cx, cy, 4.0, 2.0).unwrap(),
            cls,
        }
    }

    #[test]
    fn exact_estimates() {
        let ann = vec![lb(0.0, 0.0, ClassLabel::Car), lb(10.0, 5.0, ClassLabel::Truck)];
        let m = match_sample(&ann, &ann, DEFAULT_IOU_THRESHOLD);
        assert_eq!((m.tp, m.fp, m.fn_, m.tc, m.fc), (2, 0, 0, 2, 0));
    }

    #[test]
    fn below_threshold() {
        // shift along x by 1.714: overlap 2.286 of 4 -> iou = 2.286 / 5.714 = 0.4
        let shift = 4.0 - 2.0 * 4.0 * 0.4 / 1.4;
        let est = vec![lb(shift, 0.0, ClassLabel::Car)];
        let ann = vec![lb(0.0, 0.0, ClassLabel::Car)];
        assert!((aabb_iou(&est[0].bbox, &ann[0].bbox) - 0.4).abs() < 1e-12);
        let m = match_sample(&est, &ann, DEFAULT_IOU_THRESHOLD);
        assert_eq!((m.tp, m.fp, m.fn_), (0, 1, 1));
    }

    #[test]
    fn wrong_class() {
        let m = match_sample(
            &[lb(0.0, 0.0, ClassLabel::Truck)],
            &[lb(0.0, 0.0, ClassLabel::Car)],
            0.5,
        );
        assert_eq!((m.tp, m.tc, m.fc), (1, 0, 1));
    }

    #[test]
    fn greedy_prefers_higher_iou() {
        let ann = vec![lb(0.0, 0.0, ClassLabel::Car)];
        let est = vec![lb(0.5, 0.0, ClassLabel::Car), lb(0.1, 0.0, ClassLabel::Car)];
        let m = match_sample(&est, &ann, 0.5);
        assert_eq!(m.pairs[0].0, 1);
        assert_eq!((m.tp, m.fp), (1, 1));
    }

    #[test]
    fn metric_examples() {
        let acc = EvalAccumulator {
            tp: 2,
            fp: 1,
            fn_: 1,
            tc: 2,
            fc: 0,
            iou_sum: 1.5,
        };
        let r = compute_metrics(&acc);
        assert!((r.f1 - 4.0 / 6.0).abs() < 1e-15);
        assert_eq!(r.miou, 0.75);

        let r = compute_metrics(&EvalAccumulator {
            fp: 3,
            ..Default::default()
        });
        assert_eq!(r.f1, 0.0);
        assert!(r.flags.no_true_positives);

        let r = compute_metrics(&EvalAccumulator {
            tp: 100,
            tc: 96,
            fc: 4,
            iou_sum: 70.0,
            ..Default::default()
        });
        assert!((r.class_precision - 0.96).abs() < 1e-15);
    }
}
