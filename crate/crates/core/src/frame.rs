//! Sensor frames and the per-sample buffer that feeds both fusion paths.

use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::object::StateEstimate;

/// The five sensors of the rig: one forward camera and four corner radars.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensorId {
    Camera,
    RadarFl,
    RadarFr,
    RadarRl,
    RadarRr,
}

impl SensorId {
    pub const COUNT: usize = 5;
    pub const ALL: [SensorId; Self::COUNT] = [
        SensorId::Camera,
        SensorId::RadarFl,
        SensorId::RadarFr,
        SensorId::RadarRl,
        SensorId::RadarRr,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn kind(self) -> SensorKind {
        match self {
            SensorId::Camera => SensorKind::Camera,
            _ => SensorKind::Radar,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            SensorId::Camera => "camera",
            SensorId::RadarFl => "radar_fl",
            SensorId::RadarFr => "radar_fr",
            SensorId::RadarRl => "radar_rl",
            SensorId::RadarRr => "radar_rr",
        }
    }
}

impl fmt::Display for SensorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Sensor modality. Per-type parameters (the AKFA extra covariance, the
/// confidence filter) are keyed by this.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensorKind {
    Camera,
    Radar,
}

impl SensorKind {
    pub const ALL: [SensorKind; 2] = [SensorKind::Camera, SensorKind::Radar];
}

/// A value per sensor kind.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PerKind<T> {
    pub camera: T,
    pub radar: T,
}

impl<T> PerKind<T> {
    pub fn get(&self, kind: SensorKind) -> &T {
        match kind {
            SensorKind::Camera => &self.camera,
            SensorKind::Radar => &self.radar,
        }
    }

    pub fn get_mut(&mut self, kind: SensorKind) -> &mut T {
        match kind {
            SensorKind::Camera => &mut self.camera,
            SensorKind::Radar => &mut self.radar,
        }
    }
}

impl<T: Clone> PerKind<T> {
    pub fn splat(v: T) -> Self {
        Self {
            camera: v.clone(),
            radar: v,
        }
    }
}

/// A value per individual sensor.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PerSensor<T> {
    pub camera: T,
    pub radar_fl: T,
    pub radar_fr: T,
    pub radar_rl: T,
    pub radar_rr: T,
}

impl<T> PerSensor<T> {
    pub fn get(&self, id: SensorId) -> &T {
        match id {
            SensorId::Camera => &self.camera,
            SensorId::RadarFl => &self.radar_fl,
            SensorId::RadarFr => &self.radar_fr,
            SensorId::RadarRl => &self.radar_rl,
            SensorId::RadarRr => &self.radar_rr,
        }
    }

    pub fn get_mut(&mut self, id: SensorId) -> &mut T {
        match id {
            SensorId::Camera => &mut self.camera,
            SensorId::RadarFl => &mut self.radar_fl,
            SensorId::RadarFr => &mut self.radar_fr,
            SensorId::RadarRl => &mut self.radar_rl,
            SensorId::RadarRr => &mut self.radar_rr,
        }
    }
}

impl<T: Clone> PerSensor<T> {
    pub fn splat(v: T) -> Self {
        Self {
            camera: v.clone(),
            radar_fl: v.clone(),
            radar_fr: v.clone(),
            radar_rl: v.clone(),
            radar_rr: v,
        }
    }
}

/// Most recent object list of one sensor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensorFrame {
    pub sensor: SensorId,
    /// Arrival time (s).
    pub arrival_time: f64,
    pub objects: Vec<StateEstimate>,
}

/// Ego speed (m/s) and yaw rate (rad/s), assumed constant within a sample.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EgoMotion {
    pub speed: f64,
    pub yaw_rate: f64,
}

/// Everything available at one annotation time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleBuffer {
    /// Annotation time (s).
    pub t_a: f64,
    pub ego: EgoMotion,
    pub frames: Vec<SensorFrame>,
}

impl SampleBuffer {
    /// Frames ordered by arrival time; equal times fall back to sensor order.
    pub fn sorted_frames(&self) -> Vec<&SensorFrame> {
        let mut frames: Vec<&SensorFrame> = self.frames.iter().collect();
        frames.sort_by(|a, b| a.arrival_time.total_cmp(&b.arrival_time).then(a.sensor.cmp(&b.sensor)));
        frames
    }

    pub fn detection_count(&self) -> usize {
        self.frames.iter().map(|f| f.objects.len()).sum()
    }
}
