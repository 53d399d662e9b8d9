//! Planar geometry for fragment placement: polygons, poses, overlap tests,
//! shared edges and reference-line distances. Units are millimetres and
//! degrees throughout.

mod adjacency;
mod overlap;
mod polygon;
mod types;

pub use adjacency::{corresponding_corners, shared_edge_segments};
pub use overlap::{overlap, penetration_depth, penetration_depth_vertices};
pub use polygon::{convex_hull, ConvexPolygon};
pub use types::{circular_diff_deg, wrap_deg, Point2, Point3, Pose2, Segment2};

use crate::scalar::Real;

/// Strict-convexity tolerance on the normalized turn (sine of the angle).
pub const EPS_CONVEX: f64 = 1e-9;
/// Vertices closer than this (mm) count as duplicates.
pub const EPS_VERTEX: f64 = 1e-6;
/// Interpenetration below this (mm) counts as touching, not overlap.
pub const EPS_TOUCH: f64 = 0.1;
/// Angular tolerance (degrees) for anti-parallel shared edges.
pub const EPS_ANGLE_DEG: f64 = 1.0;
/// Lateral separation (mm) below which edges count as adjacent.
pub const EPS_ADJACENT: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GeomError {
    #[error("polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("coordinate is not finite")]
    NonFinite,
    #[error("vertex {index} is not finite")]
    NonFiniteVertex { index: usize },
    #[error("vertices {a} and {b} coincide within tolerance")]
    DuplicateVertex { a: usize, b: usize },
    #[error("polygon winding is clockwise, expected counter-clockwise")]
    ClockwiseWinding,
    #[error("polygon is not strictly convex at vertex {index}")]
    NotConvex { index: usize },
    #[error("segment endpoints coincide")]
    DegenerateSegment,
    #[error("degenerate edge intersection at edge {edge}")]
    DegenerateIntersection { edge: usize },
    #[error("operation requires a non-empty input")]
    EmptyInput,
}

/// Workspace reference line: `X` is the line y = 0, `Y` the line x = 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum LineAxis {
    X,
    Y,
}

/// Distance from `p` to a reference line and the closest point on it.
pub fn point_to_line<T: Real>(p: Point2<T>, axis: LineAxis) -> (T, Point2<T>) {
    match axis {
        LineAxis::X => (p.y.abs(), Point2::new(p.x, T::zero())),
        LineAxis::Y => (p.x.abs(), Point2::new(T::zero(), p.y)),
    }
}

/// Axis-aligned bounding box over the world vertices of posed polygons.
pub fn bounding_box<'a, T, I>(items: I) -> Result<(Point2<T>, Point2<T>), GeomError>
where
    T: Real,
    I: IntoIterator<Item = (&'a ConvexPolygon<T>, &'a Pose2<T>)>,
{
    let mut lo = Point2::new(T::infinity(), T::infinity());
    let mut hi = Point2::new(T::neg_infinity(), T::neg_infinity());
    let mut any = false;
    for (poly, pose) in items {
        any = true;
        for v in poly.world_vertices(pose) {
            lo.x = lo.x.min(v.x);
            lo.y = lo.y.min(v.y);
            hi.x = hi.x.max(v.x);
            hi.y = hi.y.max(v.y);
        }
    }
    if any {
        Ok((lo, hi))
    } else {
        Err(GeomError::EmptyInput)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_to_line_examples() {
        let (d, c) = point_to_line(Point2::new(30.0, 40.0), LineAxis::X);
        assert_eq!(d, 40.0);
        assert_eq!((c.x, c.y), (30.0, 0.0));
        let (d, c) = point_to_line(Point2::new(30.0, 40.0), LineAxis::Y);
        assert_eq!(d, 30.0);
        assert_eq!((c.x, c.y), (0.0, 40.0));
        let (d, _) = point_to_line(Point2::new(5.0, 0.0), LineAxis::X);
        assert_eq!(d, 0.0);
    }

    #[test]
    fn bounding_box_of_rotated_square() {
        let s = ConvexPolygon::axis_aligned_rect(Point2::new(0.0, 0.0), 100.0, 100.0).unwrap();
        let pose = Pose2::new(0.0, 0.0, 45.0);
        let (lo, hi) = bounding_box([(&s, &pose)]).unwrap();
        let half_diag = 50.0 * 2.0_f64.sqrt();
        assert!((lo.x + half_diag).abs() < 1e-9);
        assert!((hi.y - half_diag).abs() < 1e-9);
    }

    #[test]
    fn bounding_box_of_two_squares() {
        let s = ConvexPolygon::axis_aligned_rect(Point2::new(0.0, 0.0), 100.0, 100.0).unwrap();
        let pa = Pose2::new(0.0, 0.0, 0.0);
        let pb = Pose2::new(150.0, 0.0, 0.0);
        let (lo, hi) = bounding_box([(&s, &pa), (&s, &pb)]).unwrap();
        assert_eq!((lo.x, lo.y), (-50.0, -50.0));
        assert_eq!((hi.x, hi.y), (200.0, 50.0));
    }

    #[test]
    fn empty_bounding_box_errors() {
        let items: Vec<(&ConvexPolygon<f64>, &Pose2<f64>)> = Vec::new();
        assert!(matches!(bounding_box(items), Err(GeomError::EmptyInput)));
    }
}
