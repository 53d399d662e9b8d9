//! Footprint-shift baseline: every fragment reserves its gripper footprint
//! on the table; each new fragment starts beside its predecessor and is
//! pushed away from whatever it overlaps until it fits.

use std::collections::BTreeMap;

use crate::dataset::{FragmentId, Layout};
use crate::env::GripperModel;
use crate::geom::{self, EPS_TOUCH};
use crate::{ConvexPolygon, Point2, Pose2, Scalar};

use super::footprint::gripper_footprint;
use super::{BaselineError, PlacementPlan, PlanMethod, PlannedPlacement};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Bl2Params {
    /// Shift step length in mm.
    pub increment: Scalar,
    /// Safety margin around each footprint in mm.
    pub delta_s: Scalar,
    pub max_iterations: u32,
}

impl Default for Bl2Params {
    fn default() -> Self {
        Bl2Params { increment: 2.0, delta_s: 3.0, max_iterations: 10_000 }
    }
}

/// Shift step away from the colliding regions: `increment` times the sum of
/// the unit directions from each collider centroid towards the moving
/// footprint's centroid. Opposing colliders may cancel to a zero vector;
/// coincident centroids leave the direction undefined and are an error.
pub fn bl2_movement_vector(
    c_p: Point2,
    colliders: &[Point2],
    increment: Scalar,
) -> Result<Point2, BaselineError> {
    let mut sum = Point2::new(0.0, 0.0);
    for &c in colliders {
        let u = (c_p - c).normalized().ok_or(BaselineError::CoincidentCentroids)?;
        sum = sum + u;
    }
    Ok(sum * increment)
}

/// Plans every fragment in sequence order. The first target is the layout
/// pose; every later fragment starts at its layout offset from the
/// predecessor's placed pose, then shifts in `increment` steps until its
/// footprint clears all placed objects and reserved footprints. Orientations
/// stay at the layout values throughout.
pub fn bl2_plan(
    layout: &Layout,
    gripper: &GripperModel,
    yaws: &BTreeMap<FragmentId, Scalar>,
    params: &Bl2Params,
) -> Result<PlacementPlan, BaselineError> {
    if !(params.increment.is_finite() && params.increment > 0.0) || params.max_iterations == 0 {
        return Err(BaselineError::BadParameter(
            "footprint shifting needs increment > 0 and an iteration budget".into(),
        ));
    }
    if layout.fragments.is_empty() {
        return Err(BaselineError::EmptyLayout);
    }

    let mut footprints: BTreeMap<FragmentId, ConvexPolygon> = BTreeMap::new();
    let mut placed: BTreeMap<FragmentId, Pose2> = BTreeMap::new();
    let mut shifts = Vec::with_capacity(layout.sequence.len());
    let mut placements = Vec::with_capacity(layout.sequence.len());
    let mut prev: Option<FragmentId> = None;

    for &id in &layout.sequence {
        let fragment = layout.fragment(id).expect("sequence ids exist");
        let grasp_yaw = *yaws.get(&id).ok_or(BaselineError::MissingGraspYaw(id))?;
        let fp = gripper_footprint(&fragment.shape, grasp_yaw, gripper, params.delta_s)?;
        let theta = fragment.layout_pose.theta;

        let mut pos = match prev {
            None => fragment.layout_pose.translation(),
            Some(p) => {
                let offset = fragment.layout_pose.translation()
                    - layout.fragment(p).expect("placed earlier").layout_pose.translation();
                placed[&p].translation() + offset
            }
        };

        let mut iters = 0u32;
        let mut jitter_deg: Scalar = 0.0;
        loop {
            let pose = Pose2::new(pos.x, pos.y, theta);
            // One centroid per colliding obstacle, whether its reserved
            // footprint or its body is what we hit.
            let mut colliders = Vec::new();
            for (&oid, opose) in &placed {
                let ofp = &footprints[&oid];
                let oshape = &layout.fragment(oid).expect("placed earlier").shape;
                let hit = geom::overlap(&fp, &pose, ofp, opose, EPS_TOUCH)
                    || geom::overlap(&fp, &pose, oshape, opose, EPS_TOUCH);
                if hit {
                    colliders.push(opose.apply(ofp.centroid()));
                }
            }
            if colliders.is_empty() {
                break;
            }
            iters += 1;
            if iters > params.max_iterations {
                return Err(BaselineError::ShiftBudgetExceeded {
                    fragment: id,
                    iterations: params.max_iterations,
                });
            }
            let c_p = pose.apply(fp.centroid());
            let v = bl2_movement_vector(c_p, &colliders, params.increment)?;
            let step = if v.norm() > 1e-9 {
                jitter_deg = 0.0;
                v
            } else {
                // Opposing colliders cancelled out. Nudge off the first
                // collider's axis, widening the angle on every retry.
                jitter_deg += 1.0;
                let u = (c_p - colliders[0]).normalized().expect("coincidence handled above");
                Pose2::new(0.0, 0.0, jitter_deg).apply(u) * params.increment
            };
            pos = pos + step;
        }

        let target = Pose2::new(pos.x, pos.y, theta);
        placements.push(PlannedPlacement { id, target, grasp_yaw });
        placed.insert(id, target);
        footprints.insert(id, fp);
        shifts.push(iters);
        prev = Some(id);
    }

    Ok(PlacementPlan { placements, method: PlanMethod::FootprintShift { shift_iterations: shifts } })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    use crate::baselines::execute_plan;
    use crate::dataset::fixtures::square_row_layout;
    use crate::env::EnvConfig;
    use crate::eval::AgentTag;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn zero_yaws(layout: &Layout) -> BTreeMap<FragmentId, Scalar> {
        layout.fragments.iter().map(|f| (f.id, 0.0)).collect()
    }

    #[test]
    fn movement_vector_hand_value() {
        let v = bl2_movement_vector(Point2::new(1.0, 0.0), &[Point2::new(0.0, 0.0)], 0.01)
            .unwrap();
        assert_eq!((v.x, v.y), (0.01, 0.0));
    }

    #[test]
    fn movement_magnitude_is_bounded_by_the_collider_count() {
        let mut rng = StdRng::seed_from_u64(21);
        for _ in 0..200 {
            let c_p = Point2::new(rng.gen_range(-50.0..50.0), rng.gen_range(-50.0..50.0));
            let n = rng.gen_range(1..6);
            let colliders: Vec<Point2> = (0..n)
                .map(|_| {
                    Point2::new(
                        c_p.x + rng.gen_range(1.0..80.0) * if rng.gen() { 1.0 } else { -1.0 },
                        c_p.y + rng.gen_range(1.0..80.0) * if rng.gen() { 1.0 } else { -1.0 },
                    )
                })
                .collect();
            let v = bl2_movement_vector(c_p, &colliders, 2.0).unwrap();
            assert!(v.norm() <= 2.0 * n as Scalar + 1e-9);
        }
    }

    #[test]
    fn opposing_colliders_cancel_and_coincident_ones_error() {
        let zero = bl2_movement_vector(
            Point2::new(0.0, 0.0),
            &[Point2::new(1.0, 0.0), Point2::new(-1.0, 0.0)],
            2.0,
        )
        .unwrap();
        assert_eq!((zero.x, zero.y), (0.0, 0.0));

        let err = bl2_movement_vector(Point2::new(3.0, 4.0), &[Point2::new(3.0, 4.0)], 2.0)
            .unwrap_err();
        assert!(matches!(err, BaselineError::CoincidentCentroids));
    }

    #[test]
    fn adjacent_squares_shift_apart_along_the_row() {
        // 50 mm squares sharing an edge; footprints are 91 mm wide at zero
        // grasp yaw, so the second square must move until the centers sit
        // 90.9 mm apart: 21 shifts of 2 mm starting from 50.
        let layout = square_row_layout(2, 50.0, 50.0);
        let yaws = zero_yaws(&layout);
        let params = Bl2Params::default();
        let plan = bl2_plan(&layout, &GripperModel::default(), &yaws, &params).unwrap();

        assert_eq!(plan.method, PlanMethod::FootprintShift { shift_iterations: vec![0, 21] });
        let first = plan.placements[0].target;
        let second = plan.placements[1].target;
        assert_eq!(first, layout.fragment(0).unwrap().layout_pose, "first stays put");
        assert!((second.x - (25.0 + 50.0 + 21.0 * 2.0)).abs() < 1e-6);
        assert!((second.y - 25.0).abs() < 1e-6);
        assert_eq!(second.theta, 0.0);

        // The spacing the shift leaves behind is at least the footprint
        // overhang on each side, and the scripted execution stays clean.
        let fp = gripper_footprint(
            &layout.fragment(1).unwrap().shape,
            0.0,
            &GripperModel::default(),
            params.delta_s,
        )
        .unwrap();
        let footprint_w = fp.width_along(Point2::new(1.0, 0.0));
        let gap = (second.x - first.x) - 50.0;
        assert!(gap >= (footprint_w - 50.0) / 2.0);

        let arc = Arc::new(layout);
        let result = execute_plan(&arc, &EnvConfig::default(), &plan, AgentTag::Bl2).unwrap();
        assert!(result.collision_free() && result.all_successful());
    }

    #[test]
    fn symmetric_trap_escapes_through_the_jitter() {
        // Place the middle square last: it starts exactly between its two
        // placed neighbors, whose push directions cancel.
        let mut layout = square_row_layout(3, 50.0, 52.0);
        layout.sequence = vec![0, 2, 1];
        layout.validate().unwrap();
        let yaws = zero_yaws(&layout);
        let plan = bl2_plan(&layout, &GripperModel::default(), &yaws, &Bl2Params::default())
            .unwrap();

        let PlanMethod::FootprintShift { shift_iterations } = &plan.method else {
            panic!("wrong method");
        };
        assert_eq!(shift_iterations[0..2], [0, 0], "outer squares fit directly");
        assert!(shift_iterations[2] > 0, "middle square had to move");

        // Final placement clears both reserved footprints.
        let g = GripperModel::default();
        let fp: Vec<ConvexPolygon> = layout
            .fragments
            .iter()
            .map(|f| gripper_footprint(&f.shape, 0.0, &g, 3.0).unwrap())
            .collect();
        let poses: BTreeMap<FragmentId, Pose2> =
            plan.placements.iter().map(|p| (p.id, p.target)).collect();
        for other in [0u32, 2] {
            assert!(!geom::overlap(
                &fp[1],
                &poses[&1],
                &fp[other as usize],
                &poses[&other],
                EPS_TOUCH
            ));
        }

        let arc = Arc::new(layout);
        let result = execute_plan(&arc, &EnvConfig::default(), &plan, AgentTag::Bl2).unwrap();
        assert!(result.collision_free() && result.all_successful());
    }

    #[test]
    fn exhausted_budget_errors_out() {
        let layout = square_row_layout(2, 50.0, 50.0);
        let yaws = zero_yaws(&layout);
        let err = bl2_plan(
            &layout,
            &GripperModel::default(),
            &yaws,
            &Bl2Params { max_iterations: 3, ..Default::default() },
        )
        .unwrap_err();
        assert!(matches!(
            err,
            BaselineError::ShiftBudgetExceeded { fragment: 1, iterations: 3 }
        ));
    }
}
