//! Shared-edge detection between posed polygons and corresponding corners.

use super::polygon::ConvexPolygon;
use super::types::{Point2, Pose2, Segment2};
use super::{GeomError, EPS_ANGLE_DEG, EPS_VERTEX};
use crate::scalar::Real;

/// Finds maximal segments where an edge of `a` runs anti-parallel (within
/// `EPS_ANGLE_DEG`) to an edge of `b` at a lateral separation of at most
/// `eps_adj` mm, with tangential overlap longer than `EPS_VERTEX`. Segments
/// lie on the midline between the two edges. Polygons that only meet at a
/// vertex yield no segments.
pub fn shared_edge_segments<T: Real>(
    a: &ConvexPolygon<T>,
    pose_a: &Pose2<T>,
    b: &ConvexPolygon<T>,
    pose_b: &Pose2<T>,
    eps_adj: T,
) -> Vec<Segment2<T>> {
    let va = a.world_vertices(pose_a);
    let vb = b.world_vertices(pose_b);
    let cos_tol = -T::of(EPS_ANGLE_DEG).to_radians().cos();
    let eps_v = T::of(EPS_VERTEX);

    let mut found: Vec<Segment2<T>> = Vec::new();
    let na = va.len();
    let nb = vb.len();
    for i in 0..na {
        let a0 = va[i];
        let a1 = va[(i + 1) % na];
        let dir_a = match (a1 - a0).normalized() {
            Some(d) => d,
            None => continue,
        };
        let len_a = (a1 - a0).norm();
        let normal = dir_a.perp();
        for j in 0..nb {
            let b0 = vb[j];
            let b1 = vb[(j + 1) % nb];
            let dir_b = match (b1 - b0).normalized() {
                Some(d) => d,
                None => continue,
            };
            // Facing edges of CCW polygons run anti-parallel.
            if dir_a.dot(dir_b) > cos_tol {
                continue;
            }
            let tb0 = (b0 - a0).dot(dir_a);
            let tb1 = (b1 - a0).dot(dir_a);
            let (b_lo, b_hi) = if tb0 <= tb1 { (tb0, tb1) } else { (tb1, tb0) };
            let lo = T::zero().max(b_lo);
            let hi = len_a.min(b_hi);
            if hi - lo <= eps_v {
                continue;
            }
            // Lateral offset of b's edge from a's line, linear in the
            // tangential parameter.
            let db0 = (b0 - a0).dot(normal);
            let db1 = (b1 - a0).dot(normal);
            let lateral = |t: T| {
                if (tb1 - tb0).abs() <= eps_v {
                    db0
                } else {
                    db0 + (db1 - db0) * ((t - tb0) / (tb1 - tb0))
                }
            };
            let (d_lo, d_hi) = (lateral(lo), lateral(hi));
            if d_lo.abs() > eps_adj || d_hi.abs() > eps_adj {
                continue;
            }
            let half = T::of(0.5);
            let p_lo = a0 + dir_a * lo + normal * (d_lo * half);
            let p_hi = a0 + dir_a * hi + normal * (d_hi * half);
            if let Ok(seg) = Segment2::new(p_lo, p_hi) {
                found.push(seg);
            }
        }
    }
    let mut merged = merge_collinear(found, eps_adj);
    merged.sort_by(|s, t| s.midpoint().lex_cmp(t.midpoint()));
    merged
}

/// Merges collinear segments whose spans on the common line overlap or touch.
fn merge_collinear<T: Real>(mut segs: Vec<Segment2<T>>, eps_adj: T) -> Vec<Segment2<T>> {
    let eps_v = T::of(EPS_VERTEX);
    let mut changed = true;
    while changed {
        changed = false;
        'outer: for i in 0..segs.len() {
            for j in (i + 1)..segs.len() {
                if let Some(m) = try_merge(&segs[i], &segs[j], eps_adj, eps_v) {
                    segs[i] = m;
                    segs.remove(j);
                    changed = true;
                    break 'outer;
                }
            }
        }
    }
    segs
}

fn try_merge<T: Real>(
    s: &Segment2<T>,
    t: &Segment2<T>,
    eps_adj: T,
    eps_v: T,
) -> Option<Segment2<T>> {
    let dir = (s.b - s.a).normalized()?;
    let normal = dir.perp();
    // Same line within tolerance, regardless of direction sign.
    for p in [t.a, t.b] {
        if (p - s.a).dot(normal).abs() > eps_adj {
            return None;
        }
    }
    let params = [
        T::zero(),
        (s.b - s.a).dot(dir),
        (t.a - s.a).dot(dir),
        (t.b - s.a).dot(dir),
    ];
    let (s_lo, s_hi) = (params[0].min(params[1]), params[0].max(params[1]));
    let (t_lo, t_hi) = (params[2].min(params[3]), params[2].max(params[3]));
    if s_hi.min(t_hi) - s_lo.max(t_lo) < -eps_v {
        return None; // Disjoint spans stay separate segments.
    }
    let lo = s_lo.min(t_lo);
    let hi = s_hi.max(t_hi);
    Segment2::new(s.a + dir * lo, s.a + dir * hi).ok()
}

/// Picks the pair of segment endpoints with maximal separation; ties resolve
/// to the lexicographically smallest pair. The returned pair is ordered
/// lexicographically, so the result is invariant under segment order and
/// endpoint permutations.
pub fn corresponding_corners<T: Real>(
    segments: &[Segment2<T>],
) -> Result<(Point2<T>, Point2<T>), GeomError> {
    if segments.is_empty() {
        return Err(GeomError::EmptyInput);
    }
    let mut points: Vec<Point2<T>> = Vec::with_capacity(segments.len() * 2);
    for s in segments {
        points.push(s.a);
        points.push(s.b);
    }
    let mut best: Option<(T, (Point2<T>, Point2<T>))> = None;
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            let (p, q) = if points[i].lex_cmp(points[j]) == std::cmp::Ordering::Greater {
                (points[j], points[i])
            } else {
                (points[i], points[j])
            };
            let d = p.distance(q);
            let better = match &best {
                None => true,
                Some((bd, (bp, bq))) => {
                    d > *bd
                        || (d == *bd
                            && (p.lex_cmp(*bp), q.lex_cmp(*bq))
                                < (std::cmp::Ordering::Equal, std::cmp::Ordering::Equal))
                }
            };
            if better {
                best = Some((d, (p, q)));
            }
        }
    }
    Ok(best.expect("segments produce endpoints").1)
}
