//! Table-plane footprint of a grasped object together with the gripper.

use crate::env::{finger_footprints, GripperModel};
use crate::geom::convex_hull;
use crate::{ConvexPolygon, Point2, Pose2, Scalar};

use super::BaselineError;

/// Convex footprint of `shape` held at `grasp_yaw` degrees in the shape's
/// own frame: the hull of the object, both finger pads and the palm housing,
/// grown outward by the safety margin `delta_s` (mm). Posing the result with
/// a fragment pose therefore covers both the object and the gripper at the
/// matching EE yaw.
pub fn gripper_footprint(
    shape: &ConvexPolygon,
    grasp_yaw: Scalar,
    gripper: &GripperModel,
    delta_s: Scalar,
) -> Result<ConvexPolygon, BaselineError> {
    if !(delta_s.is_finite() && delta_s >= 0.0) {
        return Err(BaselineError::BadParameter(format!(
            "safety margin must be finite and >= 0, got {delta_s}"
        )));
    }
    let grip = Pose2::new(0.0, 0.0, grasp_yaw);
    let mut points: Vec<Point2> = shape.vertices().to_vec();
    for rect in finger_footprints(gripper) {
        points.extend(rect.vertices().iter().map(|&v| grip.apply(v)));
    }
    let palm = ConvexPolygon::axis_aligned_rect(
        Point2::new(0.0, 0.0),
        gripper.opening_width,
        gripper.palm_strip_depth,
    )?;
    points.extend(palm.vertices().iter().map(|&v| grip.apply(v)));
    let hull = convex_hull(&points)?;
    if delta_s == 0.0 {
        return Ok(hull);
    }
    Ok(hull.offset(delta_s)?)
}
