//! Points, poses and segments in the table plane.
//!
//! Lengths are millimetres, angles degrees. A pose rotates about the local
//! origin first, then translates.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use super::GeomError;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2<T> {
    pub x: T,
    pub y: T,
}

impl<T: Real> Point2<T> {
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    /// Boundary constructor: rejects NaN and infinities.
    pub fn finite(x: T, y: T) -> Result<Self, GeomError> {
        if x.is_finite() && y.is_finite() {
            Ok(Self { x, y })
        } else {
            Err(GeomError::NonFinite)
        }
    }

    pub fn dot(self, o: Self) -> T {
        self.x * o.x + self.y * o.y
    }

    /// 2D cross product (z component of the 3D cross).
    pub fn cross(self, o: Self) -> T {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> T {
        self.dot(self).sqrt()
    }

    pub fn distance(self, o: Self) -> T {
        (self - o).norm()
    }

    /// Counter-clockwise perpendicular (rotation by +90 degrees).
    pub fn perp(self) -> Self {
        Self { x: -self.y, y: self.x }
    }

    pub fn normalized(self) -> Option<Self> {
        let n = self.norm();
        if n > T::zero() {
            Some(Self { x: self.x / n, y: self.y / n })
        } else {
            None
        }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Lexicographic order: x first, then y. Total for finite points.
    pub fn lex_cmp(self, o: Self) -> std::cmp::Ordering {
        self.x
            .partial_cmp(&o.x)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(self.y.partial_cmp(&o.y).unwrap_or(std::cmp::Ordering::Equal))
    }
}

impl<T: Real> Add for Point2<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self { x: self.x + o.x, y: self.y + o.y }
    }
}

impl<T: Real> Sub for Point2<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self { x: self.x - o.x, y: self.y - o.y }
    }
}

impl<T: Real> Mul<T> for Point2<T> {
    type Output = Self;
    fn mul(self, s: T) -> Self {
        Self { x: self.x * s, y: self.y * s }
    }
}

impl<T: Real> Neg for Point2<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self { x: -self.x, y: -self.y }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point3<T> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Real> Point3<T> {
    pub fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    pub fn from_planar(p: Point2<T>, z: T) -> Self {
        Self { x: p.x, y: p.y, z }
    }

    pub fn distance(self, o: Self) -> T {
        let (dx, dy, dz) = (self.x - o.x, self.y - o.y, self.z - o.z);
        (dx * dx + dy * dy + dz * dz).sqrt()
    }
}

/// Wraps an angle in degrees into [-180, 180).
pub fn wrap_deg<T: Real>(theta: T) -> T {
    let full = T::of(360.0);
    let half = T::of(180.0);
    let w = theta - full * ((theta + half) / full).floor();
    // Guard the w == 180 case produced by rounding at the wrap boundary.
    if w >= half {
        w - full
    } else {
        w
    }
}

/// Smallest signed circular difference a - b in degrees, in (-180, 180].
pub fn circular_diff_deg<T: Real>(a: T, b: T) -> T {
    let d = wrap_deg(a - b);
    // wrap_deg maps the boundary to -180; the difference convention uses +180.
    if d == T::of(-180.0) {
        T::of(180.0)
    } else {
        d
    }
}

/// Planar pose: translation in mm, rotation in degrees within [-180, 180).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose2<T> {
    pub x: T,
    pub y: T,
    pub theta: T,
}

impl<T: Real> Pose2<T> {
    pub fn new(x: T, y: T, theta: T) -> Self {
        Self { x, y, theta: wrap_deg(theta) }
    }

    pub fn identity() -> Self {
        Self { x: T::zero(), y: T::zero(), theta: T::zero() }
    }

    pub fn translation(&self) -> Point2<T> {
        Point2::new(self.x, self.y)
    }

    /// Local -> world: rotate about the local origin, then translate.
    pub fn apply(&self, p: Point2<T>) -> Point2<T> {
        let r = self.theta.to_radians();
        let (s, c) = (r.sin(), r.cos());
        Point2::new(c * p.x - s * p.y + self.x, s * p.x + c * p.y + self.y)
    }

    /// World -> local.
    pub fn inverse_apply(&self, p: Point2<T>) -> Point2<T> {
        let r = self.theta.to_radians();
        let (s, c) = (r.sin(), r.cos());
        let (dx, dy) = (p.x - self.x, p.y - self.y);
        Point2::new(c * dx + s * dy, -s * dx + c * dy)
    }
}

/// Segment with distinct endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment2<T> {
    pub a: Point2<T>,
    pub b: Point2<T>,
}

impl<T: Real> Segment2<T> {
    pub fn new(a: Point2<T>, b: Point2<T>) -> Result<Self, GeomError> {
        if a.distance(b) <= T::of(super::EPS_VERTEX) {
            return Err(GeomError::DegenerateSegment);
        }
        Ok(Self { a, b })
    }

    pub fn length(&self) -> T {
        self.a.distance(self.b)
    }

    pub fn midpoint(&self) -> Point2<T> {
        (self.a + self.b) * T::of(0.5)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_covers_bounds() {
        assert_eq!(wrap_deg(180.0_f64), -180.0);
        assert_eq!(wrap_deg(-180.0_f64), -180.0);
        assert_eq!(wrap_deg(540.0_f64), -180.0);
        assert_eq!(wrap_deg(0.0_f64), 0.0);
        assert!((wrap_deg(190.0_f64) + 170.0).abs() < 1e-12);
        assert!((wrap_deg(-190.0_f64) - 170.0).abs() < 1e-12);
    }

    #[test]
    fn circular_diff_uses_shortest_arc() {
        assert_eq!(circular_diff_deg(350.0_f64, 10.0), -20.0);
        assert_eq!(circular_diff_deg(10.0_f64, 350.0), 20.0);
        assert_eq!(circular_diff_deg(90.0_f64, -90.0), 180.0);
    }

    #[test]
    fn pose_round_trips_points() {
        let pose = Pose2::new(50.0_f64, -20.0, 90.0);
        let p = Point2::new(3.0, 4.0);
        let w = pose.apply(p);
        assert!((w.x - (50.0 - 4.0)).abs() < 1e-12);
        assert!((w.y - (-20.0 + 3.0)).abs() < 1e-12);
        let back = pose.inverse_apply(w);
        assert!((back.x - p.x).abs() < 1e-12);
        assert!((back.y - p.y).abs() < 1e-12);
    }

    #[test]
    fn pose_constructor_wraps_theta() {
        assert_eq!(Pose2::new(0.0_f64, 0.0, 270.0).theta, -90.0);
        assert_eq!(Pose2::new(0.0_f64, 0.0, 180.0).theta, -180.0);
    }

    #[test]
    fn degenerate_segment_rejected() {
        let p = Point2::new(1.0, 1.0);
        assert!(Segment2::new(p, p).is_err());
    }

    #[test]
    fn non_finite_point_rejected() {
        assert!(Point2::finite(f64::NAN, 0.0).is_err());
        assert!(Point2::finite(0.0, f64::INFINITY).is_err());
        assert!(Point2::finite(1.0, 2.0).is_ok());
    }
}
