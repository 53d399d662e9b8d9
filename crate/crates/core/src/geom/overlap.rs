//! Separating-axis overlap test for posed convex polygons.

use super::polygon::ConvexPolygon;
use super::types::{Point2, Pose2};
use crate::scalar::Real;

/// Signed interpenetration estimate: the minimum, over the unit edge normals
/// of both polygons, of the projection-interval overlap. Positive values are
/// the separating-axis penetration depth; any negative value certifies a
/// separating axis (its magnitude lower-bounds the gap along that axis).
pub fn penetration_depth<T: Real>(
    a: &ConvexPolygon<T>,
    pose_a: &Pose2<T>,
    b: &ConvexPolygon<T>,
    pose_b: &Pose2<T>,
) -> T {
    let va = a.world_vertices(pose_a);
    let vb = b.world_vertices(pose_b);
    penetration_depth_vertices(&va, &vb)
}

/// Same as [`penetration_depth`] on pre-transformed vertex lists.
pub fn penetration_depth_vertices<T: Real>(va: &[Point2<T>], vb: &[Point2<T>]) -> T {
    let mut depth = T::infinity();
    for verts in [va, vb] {
        let n = verts.len();
        for i in 0..n {
            let edge = verts[(i + 1) % n] - verts[i];
            let axis = match edge.perp().normalized() {
                Some(u) => u,
                None => continue,
            };
            let (a_lo, a_hi) = project(va, axis);
            let (b_lo, b_hi) = project(vb, axis);
            let overlap = a_hi.min(b_hi) - a_lo.max(b_lo);
            if overlap < depth {
                depth = overlap;
            }
        }
    }
    depth
}

fn project<T: Real>(verts: &[Point2<T>], axis: Point2<T>) -> (T, T) {
    let mut lo = T::infinity();
    let mut hi = T::neg_infinity();
    for v in verts {
        let t = v.dot(axis);
        if t < lo {
            lo = t;
        }
        if t > hi {
            hi = t;
        }
    }
    (lo, hi)
}

/// True iff the polygons interpenetrate by more than `eps_touch` (mm).
/// Touching along an edge or corner is not an overlap.
pub fn overlap<T: Real>(
    a: &ConvexPolygon<T>,
    pose_a: &Pose2<T>,
    b: &ConvexPolygon<T>,
    pose_b: &Pose2<T>,
    eps_touch: T,
) -> bool {
    penetration_depth(a, pose_a, b, pose_b) > eps_touch
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::EPS_TOUCH;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn square(side: f64) -> ConvexPolygon<f64> {
        ConvexPolygon::axis_aligned_rect(Point2::new(0.0, 0.0), side, side).unwrap()
    }

    fn at(x: f64, y: f64) -> Pose2<f64> {
        Pose2::new(x, y, 0.0)
    }

    #[test]
    fn touching_squares_do_not_overlap() {
        let s = square(100.0);
        assert!(!overlap(&s, &at(0.0, 0.0), &s, &at(100.0, 0.0), EPS_TOUCH));
        let d = penetration_depth(&s, &at(0.0, 0.0), &s, &at(100.0, 0.0));
        assert!(d.abs() < 1e-12);
    }

    #[test]
    fn corner_touch_is_not_overlap() {
        let s = square(100.0);
        assert!(!overlap(&s, &at(0.0, 0.0), &s, &at(100.0, 100.0), EPS_TOUCH));
    }

    #[test]
    fn one_mm_interpenetration_overlaps() {
        let s = square(100.0);
        assert!(overlap(&s, &at(0.0, 0.0), &s, &at(99.0, 0.0), EPS_TOUCH));
        let d = penetration_depth(&s, &at(0.0, 0.0), &s, &at(99.0, 0.0));
        assert!((d - 1.0).abs() < 1e-9);
    }

    #[test]
    fn within_touch_tolerance_is_not_overlap() {
        let s = square(100.0);
        assert!(!overlap(&s, &at(0.0, 0.0), &s, &at(99.95, 0.0), EPS_TOUCH));
    }

    #[test]
    fn separated_rotated_squares_do_not_overlap() {
        let s = square(100.0);
        let pb = Pose2::new(150.0, 0.0, 45.0);
        assert!(!overlap(&s, &at(0.0, 0.0), &s, &pb, EPS_TOUCH));
    }

    #[test]
    fn overlap_is_symmetric_for_random_pairs() {
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..300 {
            let a = square(rng.gen_range(20.0..120.0));
            let b = square(rng.gen_range(20.0..120.0));
            let pa = Pose2::new(
                rng.gen_range(-60.0..60.0),
                rng.gen_range(-60.0..60.0),
                rng.gen_range(-180.0..180.0),
            );
            let pb = Pose2::new(
                rng.gen_range(-60.0..60.0),
                rng.gen_range(-60.0..60.0),
                rng.gen_range(-180.0..180.0),
            );
            assert_eq!(
                overlap(&a, &pa, &b, &pb, EPS_TOUCH),
                overlap(&b, &pb, &a, &pa, EPS_TOUCH)
            );
        }
    }
}
