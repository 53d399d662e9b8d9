//! Convex polygons with validated winding and convexity.

use serde::{Deserialize, Serialize};

use super::types::{Point2, Pose2};
use super::{GeomError, EPS_CONVEX, EPS_VERTEX};
use crate::scalar::Real;

/// Strictly convex CCW polygon. Fragment shapes additionally keep their area
/// centroid at the local origin (see [`ConvexPolygon::recentered`]); derived
/// polygons such as offsets and hulls may be off-centre.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Point2<T>>", into = "Vec<Point2<T>>")]
#[serde(bound(
    serialize = "T: Real + Serialize + Clone",
    deserialize = "T: Real + Deserialize<'de>"
))]
pub struct ConvexPolygon<T> {
    vertices: Vec<Point2<T>>,
}

impl<T: Real> TryFrom<Vec<Point2<T>>> for ConvexPolygon<T> {
    type Error = GeomError;
    fn try_from(v: Vec<Point2<T>>) -> Result<Self, GeomError> {
        Self::new(v)
    }
}

impl<T> From<ConvexPolygon<T>> for Vec<Point2<T>> {
    fn from(p: ConvexPolygon<T>) -> Self {
        p.vertices
    }
}

impl<T: Real> ConvexPolygon<T> {
    /// Validates >=3 finite vertices, no duplicates within `EPS_VERTEX`,
    /// counter-clockwise winding and strict convexity.
    pub fn new(vertices: Vec<Point2<T>>) -> Result<Self, GeomError> {
        let n = vertices.len();
        if n < 3 {
            return Err(GeomError::TooFewVertices(n));
        }
        for (i, v) in vertices.iter().enumerate() {
            if !v.is_finite() {
                return Err(GeomError::NonFiniteVertex { index: i });
            }
        }
        let eps_v = T::of(EPS_VERTEX);
        for i in 0..n {
            for j in (i + 1)..n {
                if vertices[i].distance(vertices[j]) <= eps_v {
                    return Err(GeomError::DuplicateVertex { a: i, b: j });
                }
            }
        }
        let area2 = shoelace_twice(&vertices);
        if area2 <= T::zero() {
            return Err(GeomError::ClockwiseWinding);
        }
        // Strict convexity: normalized turn at each vertex must be a positive
        // left turn (sine of the turn angle above EPS_CONVEX).
        let eps_c = T::of(EPS_CONVEX);
        for i in 0..n {
            let prev = vertices[(i + n - 1) % n];
            let cur = vertices[i];
            let next = vertices[(i + 1) % n];
            let e0 = cur - prev;
            let e1 = next - cur;
            let sin_turn = e0.cross(e1) / (e0.norm() * e1.norm());
            if sin_turn <= eps_c {
                return Err(GeomError::NotConvex { index: i });
            }
        }
        Ok(Self { vertices })
    }

    /// Builds a polygon whose local origin is its area centroid; returns the
    /// polygon together with the centroid of the input vertices.
    pub fn recentered(vertices: Vec<Point2<T>>) -> Result<(Self, Point2<T>), GeomError> {
        let raw = Self::new(vertices)?;
        let c = raw.centroid();
        let shifted = raw.vertices.into_iter().map(|v| v - c).collect();
        Ok((Self::new(shifted)?, c))
    }

    pub fn vertices(&self) -> &[Point2<T>] {
        &self.vertices
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point2<T>, Point2<T>)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    /// Shoelace area, positive for the validated CCW winding.
    pub fn area(&self) -> T {
        shoelace_twice(&self.vertices) / T::of(2.0)
    }

    /// Area-weighted centroid in the local frame.
    pub fn centroid(&self) -> Point2<T> {
        let mut cx = T::zero();
        let mut cy = T::zero();
        let mut a2 = T::zero();
        for (p, q) in self.edges() {
            let w = p.cross(q);
            cx += (p.x + q.x) * w;
            cy += (p.y + q.y) * w;
            a2 += w;
        }
        let scale = T::of(3.0) * a2;
        Point2::new(cx / scale, cy / scale)
    }

    pub fn is_centered(&self, tol: T) -> bool {
        self.centroid().norm() <= tol
    }

    /// Moves every edge outward by `delta` along its outward normal and
    /// rejoins neighbouring edges at their line intersection. The result is in
    /// the same frame as the input, so it contains the input for `delta > 0`.
    pub fn offset(&self, delta: T) -> Result<Self, GeomError> {
        let n = self.vertices.len();
        let mut shifted: Vec<(Point2<T>, Point2<T>)> = Vec::with_capacity(n);
        for (p, q) in self.edges() {
            let d = q - p;
            // CCW winding keeps the interior left of each edge; outward is the
            // right-hand normal.
            let out = (-d.perp()).normalized().ok_or(GeomError::DegenerateSegment)?;
            shifted.push((p + out * delta, d));
        }
        let mut verts = Vec::with_capacity(n);
        for i in 0..n {
            let (p0, d0) = shifted[(i + n - 1) % n];
            let (p1, d1) = shifted[i];
            let denom = d0.cross(d1);
            let scale = d0.norm() * d1.norm();
            if denom.abs() <= T::of(EPS_CONVEX) * scale {
                return Err(GeomError::DegenerateIntersection { edge: i });
            }
            // Intersection of p0 + t*d0 with p1 + s*d1.
            let t = (p1 - p0).cross(d1) / denom;
            verts.push(p0 + d0 * t);
        }
        Self::new(verts)
    }

    pub fn world_vertices(&self, pose: &Pose2<T>) -> Vec<Point2<T>> {
        self.vertices.iter().map(|&v| pose.apply(v)).collect()
    }

    /// Signed distance of `p` from the boundary: positive inside, negative
    /// outside (exact for interior points; outer distance is the max edge-line
    /// deficit, exact near edges).
    pub fn interior_depth(&self, p: Point2<T>) -> T {
        let mut depth = T::infinity();
        for (a, b) in self.edges() {
            let edge = b - a;
            let inward = edge.perp().normalized().expect("validated edge");
            let d = (p - a).dot(inward);
            if d < depth {
                depth = d;
            }
        }
        depth
    }

    /// Extent of the polygon along a unit direction (support width).
    pub fn width_along(&self, dir: Point2<T>) -> T {
        let mut lo = T::infinity();
        let mut hi = T::neg_infinity();
        for v in &self.vertices {
            let t = v.dot(dir);
            if t < lo {
                lo = t;
            }
            if t > hi {
                hi = t;
            }
        }
        hi - lo
    }

    /// Axis-aligned rectangle as a polygon, centred at `center`.
    pub fn axis_aligned_rect(center: Point2<T>, width: T, height: T) -> Result<Self, GeomError> {
        let hw = width / T::of(2.0);
        let hh = height / T::of(2.0);
        Self::new(vec![
            Point2::new(center.x - hw, center.y - hh),
            Point2::new(center.x + hw, center.y - hh),
            Point2::new(center.x + hw, center.y + hh),
            Point2::new(center.x - hw, center.y + hh),
        ])
    }
}

fn shoelace_twice<T: Real>(vertices: &[Point2<T>]) -> T {
    let n = vertices.len();
    let mut acc = T::zero();
    for i in 0..n {
        acc += vertices[i].cross(vertices[(i + 1) % n]);
    }
    acc
}

/// Convex hull of a point set (Andrew's monotone chain), CCW without
/// collinear points.
pub fn convex_hull<T: Real>(points: &[Point2<T>]) -> Result<ConvexPolygon<T>, GeomError> {
    let mut pts: Vec<Point2<T>> = points.to_vec();
    pts.sort_by(|a, b| a.lex_cmp(*b));
    pts.dedup_by(|a, b| a.distance(*b) <= T::of(EPS_VERTEX));
    if pts.len() < 3 {
        return Err(GeomError::TooFewVertices(pts.len()));
    }
    let turn_eps = T::of(1e-12);
    let build = |iter: &mut dyn Iterator<Item = Point2<T>>| {
        let mut chain: Vec<Point2<T>> = Vec::new();
        for p in iter {
            while chain.len() >= 2 {
                let a = chain[chain.len() - 2];
                let b = chain[chain.len() - 1];
                if (b - a).cross(p - a) <= turn_eps {
                    chain.pop();
                } else {
                    break;
                }
            }
            chain.push(p);
        }
        chain
    };
    let lower = build(&mut pts.iter().copied());
    let upper = build(&mut pts.iter().rev().copied());
    let mut hull: Vec<Point2<T>> = lower[..lower.len() - 1].to_vec();
    hull.extend_from_slice(&upper[..upper.len() - 1]);
    ConvexPolygon::new(hull)
}
