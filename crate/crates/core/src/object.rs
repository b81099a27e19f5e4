//! The object model shared by every fusion path.
//!
//! Coordinates live in the ego frame: x points forward, y to the left, seen
//! from above. Yaw is measured counter-clockwise from the x-axis.

use core::fmt;

use serde::{Deserialize, Serialize};

use crate::geometry::{wrap, Aabb, GeometryError};

/// Object classes. The transformer path appends one extra "no object" logit
/// after the last entry; that index is never a `ClassLabel`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassLabel {
    Car,
    Truck,
    Motorcycle,
    Bicycle,
    Pedestrian,
}

impl ClassLabel {
    pub const COUNT: usize = 5;
    pub const ALL: [ClassLabel; Self::COUNT] = [
        ClassLabel::Car,
        ClassLabel::Truck,
        ClassLabel::Motorcycle,
        ClassLabel::Bicycle,
        ClassLabel::Pedestrian,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            ClassLabel::Car => "car",
            ClassLabel::Truck => "truck",
            ClassLabel::Motorcycle => "motorcycle",
            ClassLabel::Bicycle => "bicycle",
            ClassLabel::Pedestrian => "pedestrian",
        }
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The seven continuous components carried by the Kalman state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateDim {
    X,
    Y,
    L,
    W,
    Vx,
    Vy,
    Psi,
}

impl StateDim {
    pub const COUNT: usize = 7;
    pub const ALL: [StateDim; Self::COUNT] = [
        StateDim::X,
        StateDim::Y,
        StateDim::L,
        StateDim::W,
        StateDim::Vx,
        StateDim::Vy,
        StateDim::Psi,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_angle(self) -> bool {
        self == StateDim::Psi
    }
}

/// One object: pose, extent, velocity, class and the two scores.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectState {
    /// Longitudinal position (m).
    pub x: f64,
    /// Lateral position (m).
    pub y: f64,
    /// Length (m).
    pub l: f64,
    /// Width (m).
    pub w: f64,
    /// Longitudinal velocity (m/s).
    pub vx: f64,
    /// Lateral velocity (m/s).
    pub vy: f64,
    /// Yaw (rad), kept in (-pi, pi].
    pub psi: f64,
    pub cls: ClassLabel,
    /// Existence score in [0, 1].
    pub s_e: f64,
    /// Classification score in [0, 1].
    pub s_c: f64,
}

impl ObjectState {
    /// A stationary car-sized object at `(x, y)` with full scores. Handy for
    /// tests and fixtures.
    pub fn at(x: f64, y: f64) -> Self {
        Self {
            x,
            y,
            l: 4.5,
            w: 1.8,
            vx: 0.0,
            vy: 0.0,
            psi: 0.0,
            cls: ClassLabel::Car,
            s_e: 1.0,
            s_c: 1.0,
        }
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let k = self.kinematics();
        if k.iter().any(|v| !v.is_finite()) || !self.s_e.is_finite() || !self.s_c.is_finite() {
            return Err(GeometryError::NonFinite);
        }
        if self.l <= 0.0 || self.w <= 0.0 {
            return Err(GeometryError::DegenerateExtent { l: self.l, w: self.w });
        }
        if !(self.psi > -crate::math::PI && self.psi <= crate::math::PI) {
            return Err(GeometryError::AngleOutOfRange(self.psi));
        }
        if !(0.0..=1.0).contains(&self.s_e) || !(0.0..=1.0).contains(&self.s_c) {
            return Err(GeometryError::ScoreOutOfRange);
        }
        Ok(())
    }

    /// `[x, y, l, w, vx, vy, psi]`
    pub fn kinematics(&self) -> [f64; StateDim::COUNT] {
        [self.x, self.y, self.l, self.w, self.vx, self.vy, self.psi]
    }

    /// Writes back the continuous components; yaw is re-wrapped.
    pub fn set_kinematics(&mut self, k: [f64; StateDim::COUNT]) {
        self.x = k[0];
        self.y = k[1];
        self.l = k[2];
        self.w = k[3];
        self.vx = k[4];
        self.vy = k[5];
        self.psi = wrap(k[6]);
    }

    pub fn get(&self, dim: StateDim) -> f64 {
        self.kinematics()[dim.index()]
    }

    /// Axis-aligned footprint; yaw is ignored.
    pub fn aabb(&self) -> Aabb {
        Aabb {
            cx: self.x,
            cy: self.y,
            l: self.l,
            w: self.w,
        }
    }
}

/// Diagonal covariance over `[x, y, l, w, vx, vy, psi]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DiagCovariance(pub [f64; StateDim::COUNT]);

impl DiagCovariance {
    pub const fn zeros() -> Self {
        Self([0.0; StateDim::COUNT])
    }

    pub fn new(diag: [f64; StateDim::COUNT]) -> Result<Self, GeometryError> {
        let cov = Self(diag);
        cov.validate()?;
        Ok(cov)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        for v in self.0 {
            if !v.is_finite() {
                return Err(GeometryError::NonFinite);
            }
            if v < 0.0 {
                return Err(GeometryError::NegativeVariance(v));
            }
        }
        Ok(())
    }

    pub fn get(&self, dim: StateDim) -> f64 {
        self.0[dim.index()]
    }

    pub fn std(&self, dim: StateDim) -> f64 {
        crate::math::sqrt(self.get(dim))
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&v| v == 0.0)
    }
}

/// An object together with its uncertainty. Both sensor detections and the
/// fused global objects use this type.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateEstimate {
    pub state: ObjectState,
    pub cov: DiagCovariance,
}

impl StateEstimate {
    pub fn new(state: ObjectState, cov: DiagCovariance) -> Self {
        Self { state, cov }
    }
}
