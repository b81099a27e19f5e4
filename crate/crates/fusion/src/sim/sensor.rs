use hilo_fusion_core::{wrap_angle, ClassLabel, DiagCovariance, EgoMotion, ObjectState, SensorFrame, StateEstimate};
use rand::Rng;
use rand_distr::{Beta, Distribution, Normal, Poisson};

use super::preset::{class_extent, SensorModel};
use super::scene::back_propagate;

/// Floor on reported variances so a noiseless sensor still yields a valid
/// Kalman gain.
pub const MIN_REPORTED_VARIANCE: f64 = 1e-6;

/// Smallest simulated extent (m).
const MIN_EXTENT: f64 = 0.1;

fn beta<R: Rng>(a: f64, b: f64, rng: &mut R) -> f64 {
    Beta::new(a, b).unwrap().sample(rng)
}

fn reported_cov(sm: &SensorModel) -> DiagCovariance {
    DiagCovariance(
        sm.noise_std
            .map(|s| (s * s * sm.reported_cov_scale).max(MIN_REPORTED_VARIANCE)),
    )
}

fn other_class<R: Rng>(cls: ClassLabel, rng: &mut R) -> ClassLabel {
    let k = rng.gen_range(0..ClassLabel::COUNT - 1);
    let idx = if k >= cls.index() { k + 1 } else { k };
    ClassLabel::ALL[idx]
}

fn noisy<R: Rng>(truth: &ObjectState, sm: &SensorModel, rng: &mut R) -> ObjectState {
    let mut k = truth.kinematics();
    for (v, &s) in k.iter_mut().zip(&sm.noise_std) {
        if s > 0.0 {
            *v += Normal::new(0.0, s).unwrap().sample(rng);
        }
    }
    let mut out = *truth;
    out.set_kinematics(k);
    out.l = out.l.max(MIN_EXTENT);
    out.w = out.w.max(MIN_EXTENT);
    out.psi = wrap_angle(out.psi).expect("finite heading");
    if sm.class_confusion > 0.0 && rng.gen_bool(sm.class_confusion) {
        out.cls = other_class(truth.cls, rng);
    }
    out.s_e = beta(6.0, 1.5, rng);
    out.s_c = beta(6.0, 1.5, rng);
    out
}

fn clutter<R: Rng>(sm: &SensorModel, rng: &mut R) -> ObjectState {
    let range = rng.gen_range(2.0..sm.max_range.max(2.0 + 1e-9));
    let az = sm.boresight + rng.gen_range(-sm.half_fov..=sm.half_fov);
    let cls = ClassLabel::ALL[rng.gen_range(0..ClassLabel::COUNT)];
    let ([l, w], _) = class_extent(cls);
    ObjectState {
        x: range * az.cos(),
        y: range * az.sin(),
        l,
        w,
        vx: Normal::new(0.0, 3.0).unwrap().sample(rng),
        vy: Normal::new(0.0, 1.0).unwrap().sample(rng),
        psi: wrap_angle(rng.gen_range(-3.2..3.2)).unwrap(),
        cls,
        s_e: beta(1.2, 5.0, rng),
        s_c: beta(2.0, 3.0, rng),
    }
}

/// One sensor's object list for a sample annotated at `t_a`.
///
/// The arrival time is `t_a` minus a uniform latency; each annotation is
/// moved back to that moment, tested against the sensor's sector, detected
/// with the model's probability and perturbed with Gaussian noise. Clutter
/// count is Poisson.
pub fn simulate_sensor<R: Rng>(
    annotations: &[ObjectState],
    sm: &SensorModel,
    ego: EgoMotion,
    t_a: f64,
    rng: &mut R,
) -> SensorFrame {
    let latency = if sm.latency[0] == sm.latency[1] {
        sm.latency[0]
    } else {
        rng.gen_range(sm.latency[0]..sm.latency[1])
    };
    let cov = reported_cov(sm);
    let mut objects = Vec::new();
    for a in annotations {
        let truth = back_propagate(a, ego, latency);
        if !sm.sees(truth.x, truth.y) {
            continue;
        }
        if sm.detection_prob < 1.0 && !rng.gen_bool(sm.detection_prob) {
            continue;
        }
        objects.push(StateEstimate::new(noisy(&truth, sm, rng), cov));
    }
    if sm.clutter_rate > 0.0 {
        let n = Poisson::new(sm.clutter_rate).unwrap().sample(rng) as usize;
        for _ in 0..n {
            objects.push(StateEstimate::new(clutter(sm, rng), cov));
        }
    }
    SensorFrame {
        sensor: sm.sensor,
        arrival_time: t_a - latency,
        objects,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::preset::default_rig;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn quiet(mut sm: SensorModel) -> SensorModel {
        sm.noise_std = [0.0; 7];
        sm.detection_prob = 1.0;
        sm.clutter_rate = 0.0;
        sm.class_confusion = 0.0;
        sm
    }

    #[test]
    fn noiseless_sensor_reports_visible_truth() {
        let sm = quiet(default_rig().remove(0));
        let ann = vec![ObjectState::at(30.0, 1.0), ObjectState::at(-30.0, 1.0)];
        let f = simulate_sensor(&ann, &sm, EgoMotion::default(), 1.0, &mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(f.objects.len(), 1);
        let o = f.objects[0].state;
        assert_eq!(
            (o.x, o.y, o.l, o.w, o.psi, o.cls),
            (30.0, 1.0, 4.5, 1.8, 0.0, ClassLabel::Car)
        );
        assert!(f.arrival_time <= 1.0 && f.arrival_time > 0.96);
    }

    #[test]
    fn zero_detection_probability_gives_empty_frame() {
        let mut sm = quiet(default_rig().remove(0));
        sm.detection_prob = 0.0;
        let f = simulate_sensor(
            &[ObjectState::at(30.0, 0.0)],
            &sm,
            EgoMotion::default(),
            0.0,
            &mut ChaCha8Rng::seed_from_u64(2),
        );
        assert!(f.objects.is_empty());
    }

    #[test]
    fn noise_matches_model_within_three_standard_errors() {
        let mut sm = default_rig().remove(1);
        sm.half_fov = std::f64::consts::PI;
        sm.detection_prob = 1.0;
        sm.clutter_rate = 0.0;
        sm.reported_cov_scale = 0.25;
        let truth = ObjectState {
            psi: 0.3,
            ..ObjectState::at(20.0, 5.0)
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 20_000;
        let mut errs: Vec<Vec<f64>> = (0..7).map(|_| Vec::with_capacity(n)).collect();
        let mut reported = DiagCovariance::zeros();
        for _ in 0..n {
            let f = simulate_sensor(&[truth], &sm, EgoMotion::default(), 0.0, &mut rng);
            let d = f.objects[0];
            reported = d.cov;
            for (i, (a, b)) in d.state.kinematics().iter().zip(truth.kinematics()).enumerate() {
                errs[i].push(a - b);
            }
        }
        for (i, e) in errs.iter().enumerate() {
            let s = sm.noise_std[i];
            let mean = e.iter().sum::<f64>() / n as f64;
            let var = e.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            // standard errors of the mean and of the sample variance
            assert!(mean.abs() < 3.0 * s / (n as f64).sqrt(), "dim {i} mean {mean}");
            let se_var = s * s * (2.0 / (n - 1) as f64).sqrt();
            assert!((var - s * s).abs() < 3.0 * se_var, "dim {i} var {var} vs {}", s * s);
            // reported covariance is a quarter of the true one
            assert!((var / reported.0[i] - 4.0).abs() < 4.0 * 3.0 * (2.0 / (n - 1) as f64).sqrt());
        }
    }

    #[test]
    fn clutter_count_is_poisson() {
        let mut sm = default_rig().remove(2);
        sm.clutter_rate = 2.5;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 10_000;
        let counts: Vec<f64> = (0..n)
            .map(|_| {
                simulate_sensor(&[], &sm, EgoMotion::default(), 0.0, &mut rng)
                    .objects
                    .len() as f64
            })
            .collect();
        let mean = counts.iter().sum::<f64>() / n as f64;
        assert!((mean - 2.5).abs() < 3.0 * (2.5f64 / n as f64).sqrt());
        let f = simulate_sensor(&[], &sm, EgoMotion::default(), 0.0, &mut rng);
        for o in &f.objects {
            assert!(sm.sees(o.state.x, o.state.y));
        }
    }

    #[test]
    fn class_confusion_rate() {
        let mut sm = quiet(default_rig().remove(0));
        sm.class_confusion = 0.05;
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let n = 20_000;
        let wrong = (0..n)
            .filter(|_| {
                let f = simulate_sensor(&[ObjectState::at(30.0, 0.0)], &sm, EgoMotion::default(), 0.0, &mut rng);
                f.objects[0].state.cls != ClassLabel::Car
            })
            .count() as f64
            / n as f64;
        assert!((wrong - 0.05).abs() < 3.0 * (0.05f64 * 0.95 / n as f64).sqrt());
    }
}
