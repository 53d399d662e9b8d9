//! Fixed-width observation vector. Every entry lands in [0, 1]; slots that do
//! not apply to the current task state, and unused neighbor or anchor slots,
//! are exactly 0.
//!
//! Layout of the 58 entries:
//!
//! | range    | content                                             |
//! |----------|-----------------------------------------------------|
//! | 0..36    | 6 neighbor slots x 2 corners x (x, y, z) displacement |
//! | 36..48   | 2 reference lines x 2 anchors x (x, y, z) displacement |
//! | 48..52   | EE pose (x, y, z, yaw)                              |
//! | 52..55   | retract goal (x, y, z)                              |
//! | 55       | grasped object yaw                                  |
//! | 56       | borders-a-reference-line flag                       |
//! | 57       | task state q / 3                                    |

use crate::dataset::MAX_NEIGHBORS;
use crate::{Point2, Point3, Scalar};

pub const OBS_LEN: usize = 58;

pub const CORNER_BLOCK: std::ops::Range<usize> = 0..36;
pub const LINE_BLOCK: std::ops::Range<usize> = 36..48;
pub const EE_BLOCK: std::ops::Range<usize> = 48..52;
pub const RETRACT_BLOCK: std::ops::Range<usize> = 52..55;
pub const OBJ_THETA_IDX: usize = 55;
pub const LINE_BOOL_IDX: usize = 56;
pub const TASK_STATE_IDX: usize = 57;

pub type Observation = [Scalar; OBS_LEN];

/// Inputs the environment distills from its state before encoding.
/// Displacements point from the placing object's corner toward its target
/// and are given in mm; the builder normalizes and clamps.
#[derive(Debug, Clone)]
pub struct ObservationInputs {
    pub q: u8,
    /// One entry per placed neighbor (ascending fragment id, at most 6),
    /// holding the two corner displacement vectors.
    pub corner_displacements: Vec<[Point3; 2]>,
    /// Anchor displacement vectors per reference line: index 0 for the line
    /// along y = 0, index 1 for x = 0. Empty when the line is not bordered.
    pub line_displacements: [Vec<Point3>; 2],
    /// Raw EE pose: x, y, z in mm, yaw in degrees.
    pub ee: (Scalar, Scalar, Scalar, Scalar),
    pub retract_goal: Option<Point3>,
    /// Grasped object yaw in degrees.
    pub obj_theta: Option<Scalar>,
    pub borders_line: bool,
    /// Horizontal center of the workspace box.
    pub workspace_center: Point2,
    pub workspace_half_xy: Scalar,
    pub workspace_z_max: Scalar,
    pub d_norm: Scalar,
}

fn map_displacement(v: Scalar, d_norm: Scalar) -> Scalar {
    ((v / d_norm + 1.0) / 2.0).clamp(0.0, 1.0)
}

fn map_range(v: Scalar, lo: Scalar, hi: Scalar) -> Scalar {
    ((v - lo) / (hi - lo)).clamp(0.0, 1.0)
}

pub fn build_observation(inputs: &ObservationInputs) -> Observation {
    let mut obs = [0.0; OBS_LEN];
    let in_q1 = inputs.q == 1;
    let in_q2 = inputs.q == 2;

    if in_q1 {
        for (slot, pair) in inputs.corner_displacements.iter().take(MAX_NEIGHBORS).enumerate() {
            for (c, d) in pair.iter().enumerate() {
                let base = CORNER_BLOCK.start + slot * 6 + c * 3;
                obs[base] = map_displacement(d.x, inputs.d_norm);
                obs[base + 1] = map_displacement(d.y, inputs.d_norm);
                obs[base + 2] = map_displacement(d.z, inputs.d_norm);
            }
        }
        for (line, anchors) in inputs.line_displacements.iter().enumerate() {
            for (a, d) in anchors.iter().take(2).enumerate() {
                let base = LINE_BLOCK.start + line * 6 + a * 3;
                obs[base] = map_displacement(d.x, inputs.d_norm);
                obs[base + 1] = map_displacement(d.y, inputs.d_norm);
                obs[base + 2] = map_displacement(d.z, inputs.d_norm);
            }
        }
        if let Some(theta) = inputs.obj_theta {
            obs[OBJ_THETA_IDX] = map_range(theta, -180.0, 180.0);
        }
        obs[LINE_BOOL_IDX] = if inputs.borders_line { 1.0 } else { 0.0 };
    }

    if (1..=3).contains(&inputs.q) {
        let (x, y, z, theta) = inputs.ee;
        let cx = inputs.workspace_center.x;
        let cy = inputs.workspace_center.y;
        let half = inputs.workspace_half_xy;
        obs[EE_BLOCK.start] = map_range(x, cx - half, cx + half);
        obs[EE_BLOCK.start + 1] = map_range(y, cy - half, cy + half);
        obs[EE_BLOCK.start + 2] = map_range(z, 0.0, inputs.workspace_z_max);
        obs[EE_BLOCK.start + 3] = map_range(theta, -180.0, 180.0);
    }

    if in_q2 {
        if let Some(goal) = inputs.retract_goal {
            let cx = inputs.workspace_center.x;
            let cy = inputs.workspace_center.y;
            let half = inputs.workspace_half_xy;
            obs[RETRACT_BLOCK.start] = map_range(goal.x, cx - half, cx + half);
            obs[RETRACT_BLOCK.start + 1] = map_range(goal.y, cy - half, cy + half);
            obs[RETRACT_BLOCK.start + 2] = map_range(goal.z, 0.0, inputs.workspace_z_max);
        }
    }

    obs[TASK_STATE_IDX] = Scalar::from(inputs.q.min(3)) / 3.0;
    obs
}
