use hilo_fusion_core::frame::PerKind;
use hilo_fusion_core::{ObjectState, StateEstimate};

use crate::dataset::DatasetRecord;

fn inside(o: &ObjectState, half: f64) -> bool {
    o.x.abs() <= half && o.y.abs() <= half
}

fn overlaps_any(d: &StateEstimate, annotations: &[ObjectState]) -> bool {
    let b = d.state.aabb();
    annotations.iter().any(|a| a.aabb().overlaps(&b))
}

/// Linear-interpolation percentile (the numpy default). `q` in [0, 1].
/// `None` for an empty slice.
pub fn percentile(values: &[f64], q: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    Some(v[lo] + (v[hi] - v[lo]) * (pos - lo as f64))
}

/// Drops annotations and detections outside the square field of view.
pub fn apply_fov(record: &mut DatasetRecord, half_extent: f64) {
    record.annotations.retain(|a| inside(a, half_extent));
    for f in &mut record.frames {
        f.objects.retain(|d| inside(&d.state, half_extent));
    }
}

/// Per-sensor-kind existence threshold: the `q` percentile of the scores of
/// detections that overlap an annotation. Kinds without such detections get
/// zero.
pub fn calibrate_thresholds(records: &[DatasetRecord], q: f64) -> PerKind<f64> {
    let mut scores: PerKind<Vec<f64>> = PerKind::default();
    for r in records {
        for f in &r.frames {
            let bucket = scores.get_mut(f.sensor.kind());
            bucket.extend(
                f.objects
                    .iter()
                    .filter(|d| overlaps_any(d, &r.annotations))
                    .map(|d| d.state.s_e),
            );
        }
    }
    PerKind {
        camera: percentile(&scores.camera, q).unwrap_or(0.0),
        radar: percentile(&scores.radar, q).unwrap_or(0.0),
    }
}

/// Removes detections below their kind's threshold unless they overlap an
/// annotation.
pub fn apply_confidence(record: &mut DatasetRecord, thresholds: &PerKind<f64>) {
    let annotations = record.annotations.clone();
    for f in &mut record.frames {
        let thr = *thresholds.get(f.sensor.kind());
        f.objects
            .retain(|d| d.state.s_e >= thr || overlaps_any(d, &annotations));
    }
}

/// Field-of-view clipping followed by the confidence filter.
pub fn apply_filters(record: &mut DatasetRecord, half_extent: f64, thresholds: Option<&PerKind<f64>>) {
    apply_fov(record, half_extent);
    if let Some(t) = thresholds {
        apply_confidence(record, t);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use hilo_fusion_core::{DiagCovariance, EgoMotion, SensorFrame, SensorId};

    fn det(x: f64, y: f64, s_e: f64) -> StateEstimate {
        let mut o = ObjectState::at(x, y);
        o.s_e = s_e;
        StateEstimate::new(o, DiagCovariance([1.0; 7]))
    }

    fn record(annotations: Vec<ObjectState>, frames: Vec<SensorFrame>) -> DatasetRecord {
        DatasetRecord {
            sample_id: "r".into(),
            session: "s".into(),
            t_a: 0.0,
            ego: EgoMotion::default(),
            frames,
            annotations,
        }
    }

    #[test]
    fn percentile_matches_numpy_convention() {
        let v: Vec<f64> = (1..=20).map(|i| i as f64).collect();
        // numpy.percentile(range(1, 21), 5) == 1.95
        assert!((percentile(&v, 0.05).unwrap() - 1.95).abs() < 1e-12);
        assert_eq!(percentile(&v, 0.0), Some(1.0));
        assert_eq!(percentile(&v, 1.0), Some(20.0));
        assert_eq!(percentile(&[3.0], 0.3), Some(3.0));
        assert_eq!(percentile(&[], 0.3), None);
    }

    #[test]
    fn fov_removes_far_objects() {
        let mut r = record(
            vec![ObjectState::at(150.0, 0.0), ObjectState::at(50.0, -99.0)],
            vec![SensorFrame {
                sensor: SensorId::Camera,
                arrival_time: 0.0,
                objects: vec![det(150.0, 0.0, 0.9), det(10.0, 0.0, 0.9)],
            }],
        );
        apply_fov(&mut r, 100.0);
        assert_eq!(r.annotations.len(), 1);
        assert_eq!(r.frames[0].objects.len(), 1);
        assert_eq!(r.frames[0].objects[0].state.x, 10.0);
    }

    #[test]
    fn confidence_filter_spares_overlapping_detections() {
        let mut r = record(
            vec![ObjectState::at(20.0, 0.0)],
            vec![SensorFrame {
                sensor: SensorId::RadarFl,
                arrival_time: 0.0,
                objects: vec![det(20.5, 0.2, 0.01), det(60.0, 30.0, 0.01), det(60.0, -30.0, 0.8)],
            }],
        );
        apply_confidence(
            &mut r,
            &PerKind {
                camera: 0.0,
                radar: 0.3,
            },
        );
        let kept: Vec<f64> = r.frames[0].objects.iter().map(|d| d.state.x).collect();
        assert_eq!(kept.len(), 2);
        assert_eq!(r.frames[0].objects[1].state.y, -30.0);
    }

    #[test]
    fn calibration_uses_overlapping_scores_per_kind() {
        let annotations: Vec<ObjectState> = (0..20).map(|i| ObjectState::at(10.0 * i as f64, 0.0)).collect();
        let objects: Vec<StateEstimate> = (0..20)
            .map(|i| det(10.0 * i as f64, 0.0, (i + 1) as f64 / 20.0))
            .collect();
        let mut clutter = objects.clone();
        clutter.iter_mut().for_each(|d| d.state.y = 50.0);
        let r = record(
            annotations,
            vec![
                SensorFrame {
                    sensor: SensorId::Camera,
                    arrival_time: 0.0,
                    objects,
                },
                SensorFrame {
                    sensor: SensorId::RadarRr,
                    arrival_time: 0.0,
                    objects: clutter,
                },
            ],
        );
        let t = calibrate_thresholds(&[r], 0.05);
        assert!((t.camera - 1.95 / 20.0).abs() < 1e-12);
        assert_eq!(t.radar, 0.0);
    }
}
