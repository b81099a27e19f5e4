//! Axis-aligned box geometry in the ego frame and angle utilities.
//!
//! All overlap measures work on axis-aligned footprints built from
//! `(x, y, l, w)`; yaw never enters IoU or gIoU.

use core::fmt;

use serde::{Deserialize, Serialize};

use crate::math::{self, PI, TAU};
use crate::object::{DiagCovariance, StateDim};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GeometryError {
    NonFinite,
    DegenerateExtent { l: f64, w: f64 },
    AngleOutOfRange(f64),
    NegativeVariance(f64),
    ScoreOutOfRange,
}

impl fmt::Display for GeometryError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeometryError::NonFinite => f.write_str("non-finite value"),
            GeometryError::DegenerateExtent { l, w } => {
                write!(f, "box extent must be positive, got l={l} w={w}")
            }
            GeometryError::AngleOutOfRange(a) => write!(f, "yaw {a} outside (-pi, pi]"),
            GeometryError::NegativeVariance(v) => write!(f, "negative variance {v}"),
            GeometryError::ScoreOutOfRange => f.write_str("score outside [0, 1]"),
        }
    }
}

impl core::error::Error for GeometryError {}

/// Wraps a finite angle into (-pi, pi].
pub fn wrap_angle(psi: f64) -> Result<f64, GeometryError> {
    if !psi.is_finite() {
        return Err(GeometryError::NonFinite);
    }
    Ok(wrap(psi))
}

/// Infallible variant for values already known to be finite.
#[inline]
pub(crate) fn wrap(psi: f64) -> f64 {
    let mut r = psi % TAU;
    if r <= -PI {
        r += TAU;
    } else if r > PI {
        r -= TAU;
    }
    r
}

/// Axis-aligned box given by its center and extents.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub cx: f64,
    pub cy: f64,
    /// Extent along x (m).
    pub l: f64,
    /// Extent along y (m).
    pub w: f64,
}

impl Aabb {
    pub fn new(cx: f64, cy: f64, l: f64, w: f64) -> Result<Self, GeometryError> {
        if !(cx.is_finite() && cy.is_finite() && l.is_finite() && w.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        if l <= 0.0 || w <= 0.0 {
            return Err(GeometryError::DegenerateExtent { l, w });
        }
        Ok(Self { cx, cy, l, w })
    }

    pub fn min_x(&self) -> f64 {
        self.cx - 0.5 * self.l
    }
    pub fn max_x(&self) -> f64 {
        self.cx + 0.5 * self.l
    }
    pub fn min_y(&self) -> f64 {
        self.cy - 0.5 * self.w
    }
    pub fn max_y(&self) -> f64 {
        self.cy + 0.5 * self.w
    }

    /// Area from the corners, so that a box intersected with itself gives
    /// exactly its own area.
    pub fn area(&self) -> f64 {
        (self.max_x() - self.min_x()) * (self.max_y() - self.min_y())
    }

    pub fn intersection_area(&self, other: &Aabb) -> f64 {
        let dx = self.max_x().min(other.max_x()) - self.min_x().max(other.min_x());
        let dy = self.max_y().min(other.max_y()) - self.min_y().max(other.min_y());
        dx.max(0.0) * dy.max(0.0)
    }

    /// True when the two boxes share a region of positive area.
    pub fn overlaps(&self, other: &Aabb) -> bool {
        self.intersection_area(other) > 0.0
    }

    /// Smallest axis-aligned box containing both.
    pub fn hull(&self, other: &Aabb) -> Aabb {
        let x0 = self.min_x().min(other.min_x());
        let x1 = self.max_x().max(other.max_x());
        let y0 = self.min_y().min(other.min_y());
        let y1 = self.max_y().max(other.max_y());
        Aabb {
            cx: 0.5 * (x0 + x1),
            cy: 0.5 * (y0 + y1),
            l: x1 - x0,
            w: y1 - y0,
        }
    }
}

/// Intersection over union; 0 for disjoint boxes.
pub fn aabb_iou(a: &Aabb, b: &Aabb) -> f64 {
    let inter = a.intersection_area(b);
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        return 0.0;
    }
    (inter / union).clamp(0.0, 1.0)
}

/// Generalized IoU in [-1, 1].
pub fn giou(a: &Aabb, b: &Aabb) -> f64 {
    let inter = a.intersection_area(b);
    let union = a.area() + b.area() - inter;
    let hull = a.hull(b).area();
    if union <= 0.0 || hull <= 0.0 {
        return 0.0;
    }
    let iou = inter / union;
    (iou - (hull - union) / hull).clamp(-1.0, 1.0)
}

/// `1 - gIoU`, in [0, 2].
pub fn giou_loss(a: &Aabb, b: &Aabb) -> f64 {
    1.0 - giou(a, b)
}

/// Grows the box by `kappa` standard deviations of the position on each
/// side. Negative `kappa` is treated as zero.
pub fn inflate_box(b: &Aabb, cov: &DiagCovariance, kappa: f64) -> Aabb {
    let kappa = kappa.max(0.0);
    Aabb {
        cx: b.cx,
        cy: b.cy,
        l: b.l + 2.0 * kappa * math::sqrt(cov.get(StateDim::X).max(0.0)),
        w: b.w + 2.0 * kappa * math::sqrt(cov.get(StateDim::Y).max(0.0)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bx(cx: f64, cy: f64, l: f64, w: f64) -> Aabb {
        Aabb::new(cx, cy, l, w).unwrap()
    }

    #[test]
    fn wrap_examples() {
        assert_eq!(wrap_angle(0.0).unwrap(), 0.0);
        assert!((wrap_angle(3.0 * PI).unwrap() - PI).abs() < 1e-12);
        assert_eq!(wrap_angle(-PI).unwrap(), PI);
        assert!(wrap_angle(f64::NAN).is_err());
        assert!(wrap_angle(f64::INFINITY).is_err());
    }

    #[test]
    fn iou_examples() {
        let a = bx(0.0, 0.0, 2.0, 2.0);
        assert_eq!(aabb_iou(&a, &a), 1.0);
        assert_eq!(aabb_iou(&a, &bx(10.0, 0.0, 2.0, 2.0)), 0.0);
        assert!((aabb_iou(&a, &bx(1.0, 0.0, 2.0, 2.0)) - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn giou_examples() {
        let a = bx(0.0, 0.0, 2.0, 2.0);
        assert_eq!(giou_loss(&a, &a), 0.0);
        // hull 12 x 2 = 24, union 8
        assert!((giou_loss(&a, &bx(10.0, 0.0, 2.0, 2.0)) - 5.0 / 3.0).abs() < 1e-12);
        let far = giou_loss(&a, &bx(1e7, 0.0, 2.0, 2.0));
        assert!(far > 1.999 && far <= 2.0);
    }

    #[test]
    fn inflate_examples() {
        let b = bx(3.0, -1.0, 2.0, 2.0);
        let cov = DiagCovariance([1.0, 4.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(inflate_box(&b, &cov, 0.0), b);
        let g = inflate_box(&b, &cov, 1.0);
        assert_eq!((g.l, g.w, g.cx, g.cy), (4.0, 6.0, 3.0, -1.0));
        assert_eq!(inflate_box(&b, &DiagCovariance::zeros(), 2.5), b);
    }

    #[test]
    fn degenerate_boxes_rejected() {
        assert!(Aabb::new(0.0, 0.0, 0.0, 1.0).is_err());
        assert!(Aabb::new(0.0, 0.0, 1.0, -1.0).is_err());
        assert!(Aabb::new(f64::NAN, 0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn touching_boxes_do_not_overlap() {
        let a = bx(0.0, 0.0, 2.0, 2.0);
        assert!(!a.overlaps(&bx(2.0, 0.0, 2.0, 2.0)));
        assert!(a.overlaps(&bx(1.9, 0.0, 2.0, 2.0)));
    }
}
