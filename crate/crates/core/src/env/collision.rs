//! Contact detection between the grasped object, the gripper fingers, the
//! placed objects and the table surface. All checks combine a vertical
//! interval test with a 2D polygon overlap test; grazing contact within
//! `EPS_TOUCH` does not count.

use crate::dataset::FragmentId;
use crate::geom::{self, EPS_TOUCH};
use crate::{ConvexPolygon, Pose2, Scalar};

use super::config::GripperModel;

/// One detected contact. The episode's own fragment never appears in
/// `Gripper` contacts: the fingers straddle the object they carry (and have
/// just released), so that pair is not a fault.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Contact {
    /// Placing object against an already placed object.
    PlacingObject { other: FragmentId },
    /// Gripper finger against an already placed object.
    Gripper { other: FragmentId },
    /// Gripper finger tips below the table surface.
    Table,
}

impl std::fmt::Display for Contact {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Contact::PlacingObject { other } => write!(f, "object-object({other})"),
            Contact::Gripper { other } => write!(f, "gripper-object({other})"),
            Contact::Table => write!(f, "gripper-table"),
        }
    }
}

/// A body participating in collision checks: a polygon at a planar pose
/// occupying a vertical interval.
#[derive(Debug, Clone)]
pub struct Body<'a> {
    pub id: FragmentId,
    pub shape: &'a ConvexPolygon,
    pub pose: Pose2,
    pub z_lo: Scalar,
    pub z_hi: Scalar,
}

/// Scene snapshot for one contact query.
#[derive(Debug, Clone)]
pub struct CollisionQuery<'a> {
    /// Carried (or just released) object; `None` once checks for it are moot.
    pub placing: Option<Body<'a>>,
    /// Objects resting on the table, excluding the placing object itself.
    pub tables: Vec<Body<'a>>,
    /// EE position and yaw driving the finger footprints.
    pub ee_x: Scalar,
    pub ee_y: Scalar,
    pub ee_z: Scalar,
    pub ee_theta: Scalar,
    pub gripper: &'a GripperModel,
}

fn z_overlap(a_lo: Scalar, a_hi: Scalar, b_lo: Scalar, b_hi: Scalar) -> bool {
    a_hi.min(b_hi) - a_lo.max(b_lo) > EPS_TOUCH
}

/// Local-frame finger footprints: two rectangles whose outer faces sit at
/// half the opening width on either side of the tool center, posed at the EE
/// position with the EE yaw.
pub fn finger_footprints(gripper: &GripperModel) -> [ConvexPolygon; 2] {
    let outer = gripper.opening_width / 2.0;
    let cx = outer - gripper.finger_width / 2.0;
    let make = |sign: Scalar| {
        ConvexPolygon::axis_aligned_rect(
            crate::Point2::new(sign * cx, 0.0),
            gripper.finger_width,
            gripper.finger_depth,
        )
        .expect("validated gripper dimensions form a proper rectangle")
    };
    [make(-1.0), make(1.0)]
}

/// Evaluates every contact in the scene. Results are deterministic: placing
/// contacts first, then gripper contacts, both ascending by the other id,
/// then the table contact.
pub fn check_collisions(query: &CollisionQuery<'_>) -> Vec<Contact> {
    let mut contacts = Vec::new();
    if let Some(placing) = &query.placing {
        for table in &query.tables {
            if !z_overlap(placing.z_lo, placing.z_hi, table.z_lo, table.z_hi) {
                continue;
            }
            if geom::overlap(placing.shape, &placing.pose, table.shape, &table.pose, EPS_TOUCH) {
                contacts.push(Contact::PlacingObject { other: table.id });
            }
        }
    }

    let finger_lo = query.ee_z - query.gripper.finger_length;
    let finger_pose = Pose2::new(query.ee_x, query.ee_y, query.ee_theta);
    let fingers = finger_footprints(query.gripper);
    for table in &query.tables {
        if !z_overlap(finger_lo, query.ee_z, table.z_lo, table.z_hi) {
            continue;
        }
        if fingers
            .iter()
            .any(|f| geom::overlap(f, &finger_pose, table.shape, &table.pose, EPS_TOUCH))
        {
            contacts.push(Contact::Gripper { other: table.id });
        }
    }

    if -finger_lo > EPS_TOUCH {
        contacts.push(Contact::Table);
    }
    contacts
}
