//! The four compactness metrics. All of them compare a result against the
//! placed subset of the layout, so partial assemblies score against a like
//! for like reference and a perfect reproduction scores the floor exactly.

use std::collections::BTreeMap;

use crate::dataset::{Fragment, FragmentId, Layout};
use crate::geom::{self, circular_diff_deg};
use crate::{Point2, Pose2, Scalar};

use super::{AssemblyResult, EvalError};

fn fragment<'a>(layout: &'a Layout, id: FragmentId) -> Result<&'a Fragment, EvalError> {
    layout.fragment(id).ok_or(EvalError::UnknownFragment(id))
}

/// Placed poses translated rigidly so the first placed fragment (in sequence
/// order) sits exactly at its layout centroid. Removes the arbitrary global
/// offset before rendering or side-by-side inspection; every metric below is
/// already translation invariant, so registration never changes a score.
pub fn register_placed(
    result: &AssemblyResult,
    layout: &Layout,
) -> Result<BTreeMap<FragmentId, Pose2>, EvalError> {
    let anchor = layout
        .sequence
        .iter()
        .copied()
        .find(|id| result.placed.contains_key(id))
        .ok_or(EvalError::NothingPlaced)?;
    let target = fragment(layout, anchor)?.layout_pose.translation();
    let at = result.placed[&anchor].translation();
    let d = target - at;
    Ok(result
        .placed
        .iter()
        .map(|(&id, p)| (id, Pose2::new(p.x + d.x, p.y + d.y, p.theta)))
        .collect())
}

fn vertex_bbox_area(
    layout: &Layout,
    poses: &BTreeMap<FragmentId, Pose2>,
) -> Result<Scalar, EvalError> {
    let mut items = Vec::with_capacity(poses.len());
    for (&id, pose) in poses {
        items.push((&fragment(layout, id)?.shape, pose));
    }
    let (lo, hi) = geom::bounding_box(items)?;
    Ok((hi.x - lo.x) * (hi.y - lo.y))
}

/// Percent growth of the assembly's axis-aligned bounding box area over the
/// same fragments boxed at their layout poses. Boxes span every vertex.
pub fn metric_bb_increase(result: &AssemblyResult, layout: &Layout) -> Result<Scalar, EvalError> {
    if result.placed.is_empty() {
        return Err(EvalError::NothingPlaced);
    }
    let reference: BTreeMap<FragmentId, Pose2> = result
        .placed
        .keys()
        .map(|&id| Ok((id, fragment(layout, id)?.layout_pose)))
        .collect::<Result<_, EvalError>>()?;
    let placed_area = vertex_bbox_area(layout, &result.placed)?;
    let layout_area = vertex_bbox_area(layout, &reference)?;
    Ok(100.0 * (placed_area - layout_area) / layout_area)
}

fn centroid_bbox_area(points: impl Iterator<Item = Point2>) -> Scalar {
    let mut lo = Point2::new(Scalar::INFINITY, Scalar::INFINITY);
    let mut hi = Point2::new(Scalar::NEG_INFINITY, Scalar::NEG_INFINITY);
    for p in points {
        lo = Point2::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Point2::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    (hi.x - lo.x) * (hi.y - lo.y)
}

/// Bounding-box growth measured on fragment centroids only. Ignoring the
/// fragment extents makes a pure scaling of the positions score exactly
/// `(s^2 - 1) * 100`; the vertex variant above always scores below that
/// because the fragments themselves do not grow. Errors when the layout
/// centroids of the placed subset are collinear (zero reference area).
pub fn metric_bb_increase_centroids(
    result: &AssemblyResult,
    layout: &Layout,
) -> Result<Scalar, EvalError> {
    if result.placed.is_empty() {
        return Err(EvalError::NothingPlaced);
    }
    // Shapes are centroid-centered, so a pose translation is the world
    // centroid of that fragment no matter its yaw.
    let mut reference = Vec::with_capacity(result.placed.len());
    for &id in result.placed.keys() {
        reference.push(fragment(layout, id)?.layout_pose.translation());
    }
    let layout_area = centroid_bbox_area(reference.into_iter());
    if layout_area <= 0.0 {
        return Err(EvalError::DegenerateReference);
    }
    let placed_area = centroid_bbox_area(result.placed.values().map(|p| p.translation()));
    Ok(100.0 * (placed_area - layout_area) / layout_area)
}

fn mean_nearest_distance(points: &[Point2]) -> Scalar {
    let mut acc = 0.0;
    for (i, p) in points.iter().enumerate() {
        let nearest = points
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, q)| p.distance(*q))
            .fold(Scalar::INFINITY, Scalar::min);
        acc += nearest;
    }
    acc / points.len() as Scalar
}

/// Mean nearest-neighbor centroid distance of the placed fragments minus the
/// same statistic for those fragments at their layout poses. Zero for a
/// perfect reproduction, positive when the assembly spreads out.
pub fn metric_mean_object_distance(
    result: &AssemblyResult,
    layout: &Layout,
) -> Result<Scalar, EvalError> {
    if result.placed.len() < 2 {
        return Err(EvalError::TooFewPlaced { got: result.placed.len() });
    }
    let mut placed = Vec::with_capacity(result.placed.len());
    let mut reference = Vec::with_capacity(result.placed.len());
    for (&id, pose) in &result.placed {
        placed.push(pose.translation());
        reference.push(fragment(layout, id)?.layout_pose.translation());
    }
    Ok(mean_nearest_distance(&placed) - mean_nearest_distance(&reference))
}

/// Mean absolute yaw error against the layout poses, degrees in [0, 180].
/// Differences wrap, so 179 degrees versus -179 counts as 2, not 358.
pub fn metric_angle_diff(result: &AssemblyResult, layout: &Layout) -> Result<Scalar, EvalError> {
    if result.placed.is_empty() {
        return Err(EvalError::NothingPlaced);
    }
    let mut acc = 0.0;
    for (&id, pose) in &result.placed {
        let target = fragment(layout, id)?.layout_pose.theta;
        acc += circular_diff_deg(pose.theta, target).abs();
    }
    Ok(acc / result.placed.len() as Scalar)
}

/// Percent of placement episodes that hit at least one collision, pooled over
/// every result. Each attempted fragment is one episode; repeated contacts
/// within the same episode count once.
pub fn metric_collision_rate(results: &[AssemblyResult]) -> Result<Scalar, EvalError> {
    let total: usize = results.iter().map(|r| r.success.len()).sum();
    if total == 0 {
        return Err(EvalError::NoEpisodes);
    }
    let mut collided = 0usize;
    for r in results {
        let mut ids: Vec<FragmentId> = r.collisions.iter().map(|c| c.fragment).collect();
        ids.sort_unstable();
        ids.dedup();
        collided += ids.len();
    }
    Ok(100.0 * collided as Scalar / total as Scalar)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::fixtures::{square_row_layout, two_square_layout};
    use crate::dataset::{generate_layout, GeneratorConfig};
    use crate::env::Contact;
    use crate::eval::{AgentTag, CollisionEvent};
    use approx::assert_abs_diff_eq;

    fn perfect_result(layout: &Layout, tag: AgentTag) -> AssemblyResult {
        AssemblyResult {
            layout_seed: layout.config.seed,
            tag,
            placed: layout.fragments.iter().map(|f| (f.id, f.layout_pose)).collect(),
            collisions: vec![],
            success: layout.fragments.iter().map(|f| (f.id, true)).collect(),
        }
    }

    fn generated_layout(seed: u64) -> Layout {
        generate_layout(&GeneratorConfig { seed, ..GeneratorConfig::default() }).unwrap()
    }

    #[test]
    fn perfect_reproduction_scores_the_floor() {
        let layout = generated_layout(5);
        let result = perfect_result(&layout, AgentTag::Oracle);
        assert_eq!(metric_bb_increase(&result, &layout).unwrap(), 0.0);
        assert_eq!(metric_bb_increase_centroids(&result, &layout).unwrap(), 0.0);
        assert_eq!(metric_mean_object_distance(&result, &layout).unwrap(), 0.0);
        assert_eq!(metric_angle_diff(&result, &layout).unwrap(), 0.0);
        assert_eq!(metric_collision_rate(&[result]).unwrap(), 0.0);
    }

    #[test]
    fn bounding_box_growth_matches_a_vertex_scan() {
        // Oracle: box every world vertex by hand at both pose sets.
        let scan = |layout: &Layout, poses: &BTreeMap<FragmentId, Pose2>| -> Scalar {
            let (mut lo_x, mut lo_y) = (Scalar::INFINITY, Scalar::INFINITY);
            let (mut hi_x, mut hi_y) = (Scalar::NEG_INFINITY, Scalar::NEG_INFINITY);
            for (&id, pose) in poses {
                for v in layout.fragment(id).unwrap().shape.world_vertices(pose) {
                    lo_x = lo_x.min(v.x);
                    lo_y = lo_y.min(v.y);
                    hi_x = hi_x.max(v.x);
                    hi_y = hi_y.max(v.y);
                }
            }
            (hi_x - lo_x) * (hi_y - lo_y)
        };

        let layout = two_square_layout();
        let mut result = perfect_result(&layout, AgentTag::Bl2);
        result.placed.insert(1, Pose2::new(180.0, 50.0, 0.0));

        let layout_poses: BTreeMap<FragmentId, Pose2> =
            layout.fragments.iter().map(|f| (f.id, f.layout_pose)).collect();
        let expected = 100.0 * (scan(&layout, &result.placed) - scan(&layout, &layout_poses))
            / scan(&layout, &layout_poses);

        let got = metric_bb_increase(&result, &layout).unwrap();
        assert_abs_diff_eq!(got, expected, epsilon = 1e-12);
        // 230 x 100 over 200 x 100.
        assert_abs_diff_eq!(got, 15.0, epsilon = 1e-12);
    }

    #[test]
    fn centroid_box_growth_is_exact_for_pure_scalings() {
        let layout = generated_layout(6);
        let center = layout.area_centroid();
        let s = 1.1;
        let mut result = perfect_result(&layout, AgentTag::Bl1);
        for pose in result.placed.values_mut() {
            let p = pose.translation();
            *pose = Pose2::new(
                center.x + s * (p.x - center.x),
                center.y + s * (p.y - center.y),
                pose.theta,
            );
        }
        let centroid_growth = metric_bb_increase_centroids(&result, &layout).unwrap();
        assert_abs_diff_eq!(centroid_growth, (s * s - 1.0) * 100.0, epsilon = 1e-9);

        // Fragment extents do not scale, so the vertex box grows less.
        let vertex_growth = metric_bb_increase(&result, &layout).unwrap();
        assert!(vertex_growth > 0.0 && vertex_growth < centroid_growth);
    }

    #[test]
    fn mean_distance_reports_the_added_spacing() {
        let layout = two_square_layout();
        let mut result = perfect_result(&layout, AgentTag::Bl2);
        result.placed.insert(1, Pose2::new(170.0, 50.0, 0.0));
        // Nearest-neighbor spacing rose from 100 to 120 for both fragments.
        let got = metric_mean_object_distance(&result, &layout).unwrap();
        assert_abs_diff_eq!(got, 20.0, epsilon = 1e-12);
    }

    #[test]
    fn mean_distance_scaling_law_is_exact() {
        let layout = generated_layout(7);
        let center = layout.area_centroid();
        let s = 1.3;
        let mut result = perfect_result(&layout, AgentTag::Bl1);
        for pose in result.placed.values_mut() {
            let p = pose.translation();
            *pose = Pose2::new(
                center.x + s * (p.x - center.x),
                center.y + s * (p.y - center.y),
                pose.theta,
            );
        }
        // Scaling multiplies every pairwise distance by s and keeps each
        // nearest neighbor the nearest, so the excess is (s - 1) times the
        // layout's own mean nearest-centroid spacing.
        let expected = (s - 1.0) * layout.mean_nearest_centroid_distance();
        let got = metric_mean_object_distance(&result, &layout).unwrap();
        assert_abs_diff_eq!(got, expected, epsilon = 1e-9 * expected.max(1.0));
    }

    #[test]
    fn angle_error_wraps_and_averages() {
        let mut layout = square_row_layout(2, 50.0, 200.0);
        layout.fragments[0].layout_pose = Pose2::new(25.0, 25.0, 170.0);

        let mut result = perfect_result(&layout, AgentTag::Our);
        // -170 versus 170 crosses the seam: 20 degrees, not 340.
        result.placed.insert(0, Pose2::new(25.0, 25.0, -170.0));
        result.placed.insert(1, Pose2::new(225.0, 25.0, -5.0));
        let got = metric_angle_diff(&result, &layout).unwrap();
        assert_abs_diff_eq!(got, (20.0 + 5.0) / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn collision_rate_counts_episodes_once() {
        let layout = generated_layout(10);
        let mut results: Vec<AssemblyResult> = (0..5)
            .map(|_| {
                let mut r = perfect_result(&layout, AgentTag::Our);
                let keep: Vec<FragmentId> = layout.sequence.iter().take(5).copied().collect();
                r.placed.retain(|id, _| keep.contains(id));
                r.success = keep.iter().map(|&id| (id, true)).collect();
                r
            })
            .collect();
        // 25 episodes; one fragment hit twice still counts as one episode.
        let hit = layout.sequence[0];
        results[0].collisions.push(CollisionEvent { fragment: hit, contact: Contact::Table });
        results[0]
            .collisions
            .push(CollisionEvent { fragment: hit, contact: Contact::Gripper { other: 1 } });
        results[3].collisions.push(CollisionEvent {
            fragment: layout.sequence[2],
            contact: Contact::PlacingObject { other: 1 },
        });
        let got = metric_collision_rate(&results).unwrap();
        assert_abs_diff_eq!(got, 100.0 * 2.0 / 25.0, epsilon = 1e-12);
        assert_abs_diff_eq!(got, 8.0, epsilon = 1e-12);
    }

    #[test]
    fn metrics_ignore_rigid_translations() {
        let layout = generated_layout(13);
        let base = perfect_result(&layout, AgentTag::Our);
        let mut shifted = base.clone();
        for pose in shifted.placed.values_mut() {
            *pose = Pose2::new(pose.x + 137.5, pose.y - 42.25, pose.theta);
        }
        let pairs = [
            (metric_bb_increase(&base, &layout), metric_bb_increase(&shifted, &layout)),
            (
                metric_bb_increase_centroids(&base, &layout),
                metric_bb_increase_centroids(&shifted, &layout),
            ),
            (
                metric_mean_object_distance(&base, &layout),
                metric_mean_object_distance(&shifted, &layout),
            ),
            (metric_angle_diff(&base, &layout), metric_angle_diff(&shifted, &layout)),
        ];
        for (a, b) in pairs {
            assert_abs_diff_eq!(a.unwrap(), b.unwrap(), epsilon = 1e-9);
        }

        // Registration undoes the shift exactly.
        let registered = register_placed(&shifted, &layout).unwrap();
        let anchor = layout.sequence[0];
        let target = layout.fragment(anchor).unwrap().layout_pose.translation();
        assert_abs_diff_eq!(registered[&anchor].x, target.x, epsilon = 1e-9);
        assert_abs_diff_eq!(registered[&anchor].y, target.y, epsilon = 1e-9);
    }

    #[test]
    fn degenerate_and_empty_inputs_error() {
        let layout = two_square_layout();
        let empty = AssemblyResult {
            layout_seed: layout.config.seed,
            tag: AgentTag::Our,
            placed: BTreeMap::new(),
            collisions: vec![],
            success: BTreeMap::new(),
        };
        assert!(matches!(metric_bb_increase(&empty, &layout), Err(EvalError::NothingPlaced)));
        assert!(matches!(metric_angle_diff(&empty, &layout), Err(EvalError::NothingPlaced)));
        assert!(matches!(register_placed(&empty, &layout), Err(EvalError::NothingPlaced)));
        assert!(matches!(metric_collision_rate(&[]), Err(EvalError::NoEpisodes)));

        let mut single = perfect_result(&layout, AgentTag::Our);
        single.placed.remove(&1);
        assert!(matches!(
            metric_mean_object_distance(&single, &layout),
            Err(EvalError::TooFewPlaced { got: 1 })
        ));

        // Both centroids sit on y = 50, so the reference box has zero area.
        let full = perfect_result(&layout, AgentTag::Our);
        assert!(matches!(
            metric_bb_increase_centroids(&full, &layout),
            Err(EvalError::DegenerateReference)
        ));
    }
}
