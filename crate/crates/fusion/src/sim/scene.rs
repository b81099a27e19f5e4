use std::f64::consts::{FRAC_PI_2, PI};

use hilo_fusion_core::{wrap_angle, Aabb, ClassLabel, EgoMotion, ObjectState};
use rand::Rng;
use rand_distr::{Distribution, Normal, WeightedIndex};

use super::preset::{class_extent, DomainPreset};
use super::SimError;

/// Ego footprint kept free of objects.
const EGO_BOX: Aabb = Aabb {
    cx: 0.0,
    cy: 0.0,
    l: 4.8,
    w: 2.0,
};

/// Gap added around boxes in the overlap test (m).
const CLEARANCE: f64 = 0.3;

fn uniform<R: Rng>(rng: &mut R, range: [f64; 2]) -> f64 {
    if range[0] == range[1] {
        range[0]
    } else {
        rng.gen_range(range[0]..range[1])
    }
}

fn heading<R: Rng>(preset: &DomainPreset, rng: &mut R) -> f64 {
    let base = if rng.gen_bool(preset.crossing_prob) {
        if rng.gen_bool(0.5) {
            FRAC_PI_2
        } else {
            -FRAC_PI_2
        }
    } else if rng.gen_bool(preset.oncoming_prob) {
        PI
    } else {
        0.0
    };
    let jitter = if preset.heading_std > 0.0 {
        Normal::new(0.0, preset.heading_std).unwrap().sample(rng)
    } else {
        0.0
    };
    wrap_angle(base + jitter).expect("finite heading")
}

/// One ground-truth object, without the overlap check.
fn draw_object<R: Rng>(preset: &DomainPreset, classes: &WeightedIndex<f64>, rng: &mut R) -> ObjectState {
    let cls = ClassLabel::ALL[classes.sample(rng)];
    let ([l0, w0], [dl, dw]) = class_extent(cls);
    let x = Normal::new(preset.x_mean, preset.x_std).unwrap().sample(rng);
    let y = Normal::new(preset.y_mean, preset.y_std).unwrap().sample(rng);
    let speed = match cls {
        ClassLabel::Bicycle | ClassLabel::Pedestrian => uniform(rng, preset.vru_speed),
        _ => uniform(rng, preset.vehicle_speed),
    };
    let psi = heading(preset, rng);
    ObjectState {
        x,
        y,
        l: l0 + rng.gen_range(-dl..=dl),
        w: w0 + rng.gen_range(-dw..=dw),
        vx: speed * psi.cos(),
        vy: speed * psi.sin(),
        psi,
        cls,
        s_e: 1.0,
        s_c: 1.0,
    }
}

fn padded(o: &ObjectState) -> Aabb {
    Aabb {
        cx: o.x,
        cy: o.y,
        l: o.l + CLEARANCE,
        w: o.w + CLEARANCE,
    }
}

/// Samples a scene of non-overlapping objects inside the square field of
/// view, by rejection. Fails when `budget` draws are not enough.
pub fn generate_scene<R: Rng>(
    preset: &DomainPreset,
    fov_half_extent: f64,
    max_objects: usize,
    budget: usize,
    rng: &mut R,
) -> Result<Vec<ObjectState>, SimError> {
    let classes = WeightedIndex::new(preset.class_mix).map_err(|e| SimError::InvalidConfig(e.to_string()))?;
    let lo = preset.object_count[0].min(max_objects);
    let hi = preset.object_count[1].min(max_objects);
    let wanted = rng.gen_range(lo..=hi);
    let mut placed: Vec<ObjectState> = Vec::with_capacity(wanted);
    let mut draws = 0;
    while placed.len() < wanted {
        if draws == budget {
            return Err(SimError::RejectionBudget {
                placed: placed.len(),
                wanted,
            });
        }
        draws += 1;
        let o = draw_object(preset, &classes, rng);
        let inside = o.x.abs() <= fov_half_extent && o.y.abs() <= fov_half_extent;
        let b = padded(&o);
        if inside && !b.overlaps(&EGO_BOX) && placed.iter().all(|p| !padded(p).overlaps(&b)) {
            placed.push(o);
        }
    }
    Ok(placed)
}

/// Ego speed and yaw rate for one recording session.
pub fn draw_ego<R: Rng>(preset: &DomainPreset, rng: &mut R) -> EgoMotion {
    let yaw_rate = if preset.ego_yaw_rate_std > 0.0 {
        Normal::new(0.0, preset.ego_yaw_rate_std).unwrap().sample(rng)
    } else {
        0.0
    };
    EgoMotion {
        speed: uniform(rng, preset.ego_speed),
        yaw_rate,
    }
}

/// State of an object `tau` seconds before the annotation time, expressed
/// in the ego frame of that earlier moment.
///
/// This inverts the fusion pipeline's motion model exactly (ego
/// compensation followed by constant-velocity prediction), so detections
/// carry no model mismatch beyond the added sensor noise.
pub fn back_propagate(o: &ObjectState, ego: EgoMotion, tau: f64) -> ObjectState {
    if tau <= 0.0 {
        return *o;
    }
    // undo the constant-velocity step
    let xe = o.x - o.vx * tau;
    let ye = o.y - o.vy * tau;
    // undo the ego step: shift forward, then rotate by +theta
    let theta = ego.yaw_rate * tau;
    let (s, c) = theta.sin_cos();
    let xs = xe + ego.speed * tau;
    let mut out = *o;
    out.x = c * xs - s * ye;
    out.y = s * xs + c * ye;
    out.vx = c * o.vx - s * o.vy;
    out.vy = s * o.vx + c * o.vy;
    out.psi = wrap_angle(o.psi + theta).expect("finite heading");
    out
}
