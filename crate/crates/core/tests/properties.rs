use hilo_fusion_core::akf::{akf_update, AkfFuser, PipelineConfig};
use hilo_fusion_core::eval::{compute_metrics, match_sample, EvalAccumulator, LabeledBox};
use hilo_fusion_core::geometry::giou;
use hilo_fusion_core::{
    aabb_iou, giou_loss, inflate_box, wrap_angle, Aabb, ClassLabel, DiagCovariance, EgoMotion, ObjectState,
    SampleBuffer, SensorFrame, SensorId, StateEstimate,
};
use proptest::prelude::*;

fn aabb() -> impl Strategy<Value = Aabb> {
    (-50.0..50.0f64, -50.0..50.0f64, 0.1..20.0f64, 0.1..20.0f64).prop_map(|(x, y, l, w)| Aabb::new(x, y, l, w).unwrap())
}

fn cov() -> impl Strategy<Value = DiagCovariance> {
    prop::array::uniform7(0.01..10.0f64).prop_map(DiagCovariance)
}

fn class() -> impl Strategy<Value = ClassLabel> {
    (0..ClassLabel::COUNT).prop_map(|i| ClassLabel::from_index(i).unwrap())
}

fn estimate() -> impl Strategy<Value = StateEstimate> {
    (
        (-60.0..60.0f64, -40.0..40.0f64, 0.5..12.0f64, 0.5..3.0f64),
        (-20.0..20.0f64, -5.0..5.0f64, -3.1..3.1f64),
        (class(), 0.0..=1.0f64, 0.0..=1.0f64),
        cov(),
    )
        .prop_map(|((x, y, l, w), (vx, vy, psi), (cls, s_e, s_c), cov)| {
            StateEstimate::new(
                ObjectState {
                    x,
                    y,
                    l,
                    w,
                    vx,
                    vy,
                    psi,
                    cls,
                    s_e,
                    s_c,
                },
                cov,
            )
        })
}

fn buffer() -> impl Strategy<Value = SampleBuffer> {
    let frame = (
        0..SensorId::COUNT,
        0.0..0.04f64,
        prop::collection::vec(estimate(), 0..6),
    )
        .prop_map(|(s, t, objects)| SensorFrame {
            sensor: SensorId::ALL[s],
            arrival_time: t,
            objects,
        });
    (prop::collection::vec(frame, 0..6), 0.0..30.0f64, -0.5..0.5f64).prop_map(|(frames, speed, yaw_rate)| {
        SampleBuffer {
            t_a: 0.04,
            ego: EgoMotion { speed, yaw_rate },
            frames,
        }
    })
}

proptest! {
    #[test]
    fn iou_symmetric_and_bounded(a in aabb(), b in aabb()) {
        let ab = aabb_iou(&a, &b);
        prop_assert_eq!(ab, aabb_iou(&b, &a));
        prop_assert!((0.0..=1.0).contains(&ab));
    }

    #[test]
    fn self_overlap(a in aabb()) {
        prop_assert_eq!(aabb_iou(&a, &a), 1.0);
        prop_assert!(giou_loss(&a, &a).abs() < 1e-12);
    }

    #[test]
    fn giou_loss_range(a in aabb(), b in aabb()) {
        let l = giou_loss(&a, &b);
        prop_assert!((0.0..=2.0).contains(&l));
        prop_assert!(giou(&a, &b) <= aabb_iou(&a, &b) + 1e-12);
    }

    #[test]
    fn giou_loss_grows_with_separation(a in aabb(), l in 0.1..20.0f64, w in 0.1..20.0f64, steps in prop::collection::vec(0.0..3.0f64, 1..20), along_x in any::<bool>()) {
        let mut offset = 0.0;
        let mut last = -1.0;
        for s in steps {
            offset += s;
            let (dx, dy) = if along_x { (offset, 0.0) } else { (0.0, offset) };
            let b = Aabb::new(a.cx + dx, a.cy + dy, l, w).unwrap();
            let loss = giou_loss(&a, &b);
            prop_assert!(loss >= last - 1e-12, "{loss} after {last}");
            last = loss;
        }
    }

    #[test]
    fn wrap_idempotent(x in -1e4..1e4f64) {
        let once = wrap_angle(x).unwrap();
        prop_assert_eq!(wrap_angle(once).unwrap(), once);
        prop_assert!(once > -std::f64::consts::PI && once <= std::f64::consts::PI);
        prop_assert!(((x - once) / std::f64::consts::TAU - ((x - once) / std::f64::consts::TAU).round()).abs() < 1e-9);
    }

    #[test]
    fn inflate_never_shrinks(b in aabb(), c in cov(), kappa in 0.0..3.0f64) {
        let i = inflate_box(&b, &c, kappa);
        prop_assert_eq!((i.cx, i.cy), (b.cx, b.cy));
        prop_assert!(i.l >= b.l && i.w >= b.w);
    }

    #[test]
    fn posterior_variance_not_above_prior(g in estimate(), m in estimate(), extra in prop::array::uniform7(0.0..5.0f64)) {
        let post = akf_update(&g, &m, &DiagCovariance(extra)).unwrap();
        for i in 0..7 {
            prop_assert!(post.cov.0[i] <= g.cov.0[i]);
            prop_assert!(post.cov.0[i] >= 0.0);
        }
    }

    #[test]
    fn huge_measurement_variance_is_ignored(g in estimate(), mut m in estimate()) {
        for i in 0..7 {
            m.cov.0[i] = 1e9 * g.cov.0[i];
        }
        let post = akf_update(&g, &m, &DiagCovariance::zeros()).unwrap();
        let before = g.state.kinematics();
        let after = post.state.kinematics();
        for i in 0..7 {
            // innovations are bounded by the strategy ranges, so absolute scale ~1e-9 * 120
            let tol = 1e-6 * before[i].abs().max(1.0);
            prop_assert!((after[i] - before[i]).abs() <= tol, "dim {i}: {} vs {}", after[i], before[i]);
        }
    }

    #[test]
    fn fuse_sample_contracts(buf in buffer()) {
        let fuser = AkfFuser::new(PipelineConfig::default()).unwrap();
        let out = fuser.fuse_sample(&buf).unwrap();
        prop_assert!(out.len() <= buf.detection_count());
        let again = fuser.fuse_sample(&buf).unwrap();
        // bit-identical, including NaN-free floats compared through their bits
        let bits = |v: &[StateEstimate]| v.iter().flat_map(|e| e.state.kinematics().into_iter().chain(e.cov.0).map(f64::to_bits)).collect::<Vec<_>>();
        prop_assert_eq!(bits(&out), bits(&again));
        prop_assert_eq!(out, again);
    }

    #[test]
    fn fusion_is_sample_local(bufs in prop::collection::vec(buffer(), 1..5)) {
        let fuser = AkfFuser::new(PipelineConfig::default()).unwrap();
        let forward: Vec<_> = bufs.iter().map(|b| fuser.fuse_sample(b).unwrap()).collect();
        let mut backward: Vec<_> = bufs.iter().rev().map(|b| fuser.fuse_sample(b).unwrap()).collect();
        backward.reverse();
        prop_assert_eq!(forward, backward);
    }
}

// ---- evaluation ----

fn labeled() -> impl Strategy<Value = LabeledBox> {
    (-20.0..20.0f64, -20.0..20.0f64, 1.0..6.0f64, 1.0..3.0f64, class()).prop_map(|(x, y, l, w, cls)| LabeledBox {
        bbox: Aabb::new(x, y, l, w).unwrap(),
        cls,
    })
}

/// Ground truth nudged towards the annotations so true positives happen.
fn sample() -> impl Strategy<Value = (Vec<LabeledBox>, Vec<LabeledBox>)> {
    prop::collection::vec(labeled(), 0..6)
        .prop_flat_map(|ann| {
            let n = ann.len();
            let jitter = prop::collection::vec((-0.6..0.6f64, -0.3..0.3f64, class(), any::<bool>()), n);
            (Just(ann), jitter, prop::collection::vec(labeled(), 0..3))
        })
        .prop_map(|(ann, jitter, extra)| {
            let mut est: Vec<LabeledBox> = ann
                .iter()
                .zip(jitter)
                .filter(|(_, j)| j.3)
                .map(|(a, (dx, dy, cls, _))| LabeledBox {
                    bbox: Aabb::new(a.bbox.cx + dx, a.bbox.cy + dy, a.bbox.l, a.bbox.w).unwrap(),
                    cls,
                })
                .collect();
            est.extend(extra);
            (est, ann)
        })
}

proptest! {
    #[test]
    fn match_counts_conserved((est, ann) in sample()) {
        let m = match_sample(&est, &ann, 0.5);
        prop_assert_eq!(m.tp + m.fn_, ann.len() as u64);
        prop_assert_eq!(m.tp + m.fp, est.len() as u64);
        prop_assert_eq!(m.tc + m.fc, m.tp);
        for &(e, a, iou) in &m.pairs {
            prop_assert!((0.5..=1.0).contains(&iou));
            prop_assert_eq!(iou, aabb_iou(&est[e].bbox, &ann[a].bbox));
        }
    }

    #[test]
    fn match_order_invariant_when_ious_distinct((est, ann) in sample(), rot in 0usize..8) {
        let mut ious: Vec<f64> = est.iter().flat_map(|e| ann.iter().map(move |a| aabb_iou(&e.bbox, &a.bbox))).filter(|&v| v >= 0.5).collect();
        ious.sort_by(f64::total_cmp);
        prop_assume!(ious.windows(2).all(|w| w[0] != w[1]));
        let mut shuffled = est.clone();
        if !shuffled.is_empty() {
            let k = rot % shuffled.len();
            shuffled.rotate_left(k);
            shuffled.reverse();
        }
        let a = match_sample(&est, &ann, 0.5);
        let b = match_sample(&shuffled, &ann, 0.5);
        prop_assert_eq!((a.tp, a.fp, a.fn_, a.tc, a.fc), (b.tp, b.fp, b.fn_, b.tc, b.fc));
        prop_assert_eq!(a.iou_sum(), b.iou_sum());
    }

    #[test]
    fn metrics_match_recount(samples in prop::collection::vec(sample(), 1..8)) {
        let mut acc = EvalAccumulator::default();
        let mut raw = Vec::new();
        for (est, ann) in &samples {
            let m = match_sample(est, ann, 0.5);
            acc.add(&m);
            raw.push((est, ann, m));
        }
        // recount from the raw pair lists only
        let (mut tp, mut tc, mut n_est, mut n_ann, mut iou) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (est, ann, m) in &raw {
            n_est += est.len() as f64;
            n_ann += ann.len() as f64;
            for &(e, a, v) in &m.pairs {
                tp += 1.0;
                iou += v;
                if est[e].cls == ann[a].cls {
                    tc += 1.0;
                }
            }
        }
        let fp = n_est - tp;
        let fn_ = n_ann - tp;
        let r = compute_metrics(&acc);
        let f1 = if tp + fp + fn_ > 0.0 { 2.0 * tp / (2.0 * tp + fp + fn_) } else { 0.0 };
        prop_assert!((r.f1 - f1).abs() < 1e-12);
        if tp > 0.0 {
            prop_assert!((r.class_precision - tc / tp).abs() < 1e-12);
            prop_assert!((r.miou - iou / tp).abs() < 1e-12);
            prop_assert!((0.5..=1.0).contains(&r.miou));
        } else {
            prop_assert!(r.flags.no_true_positives);
            prop_assert_eq!(r.miou, 0.0);
        }
    }
}
