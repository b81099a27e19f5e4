use std::f64::consts::PI;

use hilo_fusion_core::{ClassLabel, SensorId};
use serde::{Deserialize, Serialize};

use super::SimError;

/// Everything the simulator knows about one sensor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensorModel {
    pub sensor: SensorId,
    /// Mounting direction (rad, ego frame). Sensors sit at the ego origin.
    pub boresight: f64,
    /// Half opening angle of the sector (rad). `pi` means all around.
    pub half_fov: f64,
    pub max_range: f64,
    /// True noise std for `[x, y, l, w, vx, vy, psi]`.
    pub noise_std: [f64; 7],
    /// Reported variance is `noise_std^2 * reported_cov_scale`; below one
    /// makes the sensor overconfident.
    pub reported_cov_scale: f64,
    pub detection_prob: f64,
    /// Mean number of clutter objects per frame.
    pub clutter_rate: f64,
    /// Uniform latency range (s); arrival time is `t_a - latency`.
    pub latency: [f64; 2],
    /// Probability of reporting a wrong class.
    pub class_confusion: f64,
}

impl SensorModel {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |why: &str| Err(SimError::InvalidConfig(format!("sensor {}: {why}", self.sensor)));
        if !(0.0..=1.0).contains(&self.detection_prob) {
            return bad("detection probability outside [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.class_confusion) {
            return bad("class confusion outside [0, 1]");
        }
        if !(self.reported_cov_scale > 0.0) {
            return bad("reported covariance scale must be positive");
        }
        if self.noise_std.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return bad("noise std must be finite and non-negative");
        }
        if !(self.half_fov > 0.0 && self.max_range > 0.0) {
            return bad("empty field of view");
        }
        if !(self.clutter_rate >= 0.0 && self.clutter_rate.is_finite()) {
            return bad("clutter rate must be non-negative");
        }
        if !(0.0 <= self.latency[0] && self.latency[0] <= self.latency[1]) {
            return bad("latency range must satisfy 0 <= min <= max");
        }
        Ok(())
    }

    /// Whether an ego-frame position lies in this sensor's sector.
    pub fn sees(&self, x: f64, y: f64) -> bool {
        let range = x.hypot(y);
        if range > self.max_range {
            return false;
        }
        if self.half_fov >= PI {
            return true;
        }
        let off = (y.atan2(x) - self.boresight + PI).rem_euclid(2.0 * PI) - PI;
        off.abs() <= self.half_fov
    }
}

/// Statistics of one synthetic driving domain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainPreset {
    pub name: String,
    /// Inclusive range of objects per scene.
    pub object_count: [usize; 2],
    /// Probabilities in [`ClassLabel::ALL`] order.
    pub class_mix: [f64; ClassLabel::COUNT],
    pub x_mean: f64,
    pub x_std: f64,
    pub y_mean: f64,
    pub y_std: f64,
    /// Ground speed range of motor vehicles (m/s).
    pub vehicle_speed: [f64; 2],
    /// Ground speed range of bicycles and pedestrians (m/s).
    pub vru_speed: [f64; 2],
    /// Std of the heading around the lane direction (rad).
    pub heading_std: f64,
    /// Share of objects travelling against the ego direction.
    pub oncoming_prob: f64,
    /// Share of objects crossing the ego path.
    pub crossing_prob: f64,
    pub ego_speed: [f64; 2],
    pub ego_yaw_rate_std: f64,
    pub sensors: Vec<SensorModel>,
}

fn camera() -> SensorModel {
    SensorModel {
        sensor: SensorId::Camera,
        boresight: 0.0,
        half_fov: 30f64.to_radians(),
        max_range: 100.0,
        noise_std: [1.2, 0.25, 0.5, 0.15, 1.5, 0.5, 0.05],
        reported_cov_scale: 1.0,
        detection_prob: 0.9,
        clutter_rate: 0.4,
        latency: [0.0, 0.04],
        class_confusion: 0.05,
    }
}

fn radar(sensor: SensorId, boresight_deg: f64) -> SensorModel {
    SensorModel {
        sensor,
        boresight: boresight_deg.to_radians(),
        half_fov: 75f64.to_radians(),
        max_range: 80.0,
        noise_std: [0.3, 0.7, 0.8, 0.3, 0.3, 1.0, 0.15],
        reported_cov_scale: 1.0,
        detection_prob: 0.85,
        clutter_rate: 0.8,
        latency: [0.0, 0.04],
        class_confusion: 0.05,
    }
}

/// The five-sensor rig: a forward camera and four corner radars.
pub fn default_rig() -> Vec<SensorModel> {
    vec![
        camera(),
        radar(SensorId::RadarFl, 45.0),
        radar(SensorId::RadarFr, -45.0),
        radar(SensorId::RadarRl, 135.0),
        radar(SensorId::RadarRr, -135.0),
    ]
}

impl DomainPreset {
    /// Long-range, mostly same-direction traffic in a narrow lateral band.
    pub fn highway() -> Self {
        Self {
            name: "highway".into(),
            object_count: [3, 12],
            class_mix: [0.80, 0.12, 0.04, 0.02, 0.02],
            x_mean: 10.0,
            x_std: 40.0,
            y_mean: 0.0,
            y_std: 4.0,
            vehicle_speed: [20.0, 35.0],
            vru_speed: [3.0, 8.0],
            heading_std: 0.03,
            oncoming_prob: 0.1,
            crossing_prob: 0.0,
            ego_speed: [22.0, 33.0],
            ego_yaw_rate_std: 0.01,
            sensors: default_rig(),
        }
    }

    /// Short range, wide lateral spread, more cyclists and pedestrians and
    /// crossing traffic.
    pub fn urban() -> Self {
        Self {
            name: "urban".into(),
            object_count: [3, 14],
            class_mix: [0.55, 0.08, 0.07, 0.15, 0.15],
            x_mean: 5.0,
            x_std: 20.0,
            y_mean: 0.0,
            y_std: 10.0,
            vehicle_speed: [0.0, 14.0],
            vru_speed: [0.0, 5.0],
            heading_std: 0.15,
            oncoming_prob: 0.3,
            crossing_prob: 0.2,
            ego_speed: [0.0, 14.0],
            ego_yaw_rate_std: 0.08,
            sensors: default_rig(),
        }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "highway" | "hw" => Some(Self::highway()),
            "urban" | "urb" => Some(Self::urban()),
            _ => None,
        }
    }

    /// Noise-only variant for filter checks: every sensor sees everything,
    /// always detects, never invents objects and reports honest covariances.
    pub fn linear_gaussian(mut self) -> Self {
        for s in &mut self.sensors {
            s.half_fov = PI;
            s.max_range = 1e3;
            s.detection_prob = 1.0;
            s.clutter_rate = 0.0;
            s.class_confusion = 0.0;
            s.reported_cov_scale = 1.0;
        }
        self.name = format!("{}-lg", self.name);
        self
    }

    pub fn sensor_mut(&mut self, id: SensorId) -> Option<&mut SensorModel> {
        self.sensors.iter_mut().find(|s| s.sensor == id)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let sum: f64 = self.class_mix.iter().sum();
        if (sum - 1.0).abs() > 1e-9 || self.class_mix.iter().any(|p| *p < 0.0) {
            return Err(SimError::InvalidConfig(format!("class mix sums to {sum}, not 1")));
        }
        if !(self.x_std > 0.0 && self.y_std > 0.0) {
            return Err(SimError::InvalidConfig("position spreads must be positive".into()));
        }
        if self.object_count[0] > self.object_count[1] {
            return Err(SimError::InvalidConfig("object count range is empty".into()));
        }
        for r in [self.vehicle_speed, self.vru_speed, self.ego_speed] {
            if !(r[0] <= r[1]) {
                return Err(SimError::InvalidConfig("speed range is empty".into()));
            }
        }
        for p in [self.oncoming_prob, self.crossing_prob] {
            if !(0.0..=1.0).contains(&p) {
                return Err(SimError::InvalidConfig("probability outside [0, 1]".into()));
            }
        }
        if !(self.heading_std >= 0.0 && self.ego_yaw_rate_std >= 0.0) {
            return Err(SimError::InvalidConfig("negative std".into()));
        }
        let mut seen = Vec::new();
        for s in &self.sensors {
            s.validate()?;
            if seen.contains(&s.sensor) {
                return Err(SimError::InvalidConfig(format!("sensor {} listed twice", s.sensor)));
            }
            seen.push(s.sensor);
        }
        Ok(())
    }
}

/// Nominal `(length, width)` per class and the uniform jitter around it.
pub(crate) fn class_extent(cls: ClassLabel) -> ([f64; 2], [f64; 2]) {
    match cls {
        ClassLabel::Car => ([4.5, 1.85], [0.5, 0.1]),
        ClassLabel::Truck => ([10.0, 2.5], [3.0, 0.1]),
        ClassLabel::Motorcycle => ([2.1, 0.8], [0.2, 0.1]),
        ClassLabel::Bicycle => ([1.8, 0.6], [0.1, 0.05]),
        ClassLabel::Pedestrian => ([0.6, 0.6], [0.1, 0.1]),
    }
}
