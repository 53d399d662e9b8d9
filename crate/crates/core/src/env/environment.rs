//! The placement environment: a task-state machine over a kinematic gripper
//! model. An episode starts with the object already grasped (q = 1), the
//! agent maneuvers it toward its neighbors and reference lines, opens the
//! gripper (q = 2) and retracts to a goal point. Contacts terminate the
//! episode immediately.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::{FragmentId, Layout};
use crate::geom::{circular_diff_deg, wrap_deg};
use crate::{Point2, Point3, Pose2, Scalar};

use super::collision::{check_collisions, Body, CollisionQuery, Contact};
use super::config::EnvConfig;
use super::observation::{build_observation, Observation, ObservationInputs};
use super::rewards::{
    approach_reward, collision_penalty, release_reward, retract_reward, RewardBreakdown,
};
use super::EnvError;

/// End-effector pose and gripper state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EEState {
    pub x: Scalar,
    pub y: Scalar,
    pub z: Scalar,
    /// Yaw in degrees, wrapped to [-180, 180).
    pub theta: Scalar,
    pub gripper_open: bool,
}

impl EEState {
    pub fn position(&self) -> Point3 {
        Point3::new(self.x, self.y, self.z)
    }
}

/// Normalized incremental command. Components outside [-1, 1] are clamped,
/// non-finite components are treated as zero.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Action {
    pub dx: Scalar,
    pub dy: Scalar,
    pub dz: Scalar,
    pub dtheta: Scalar,
    pub open_cmd: Scalar,
}

impl Action {
    pub const ZERO: Action = Action { dx: 0.0, dy: 0.0, dz: 0.0, dtheta: 0.0, open_cmd: 0.0 };

    pub fn from_array(a: [Scalar; 5]) -> Self {
        Action { dx: a[0], dy: a[1], dz: a[2], dtheta: a[3], open_cmd: a[4] }
    }

    pub fn to_array(self) -> [Scalar; 5] {
        [self.dx, self.dy, self.dz, self.dtheta, self.open_cmd]
    }

    pub fn clamped(self) -> Self {
        let c = |v: Scalar| if v.is_finite() { v.clamp(-1.0, 1.0) } else { 0.0 };
        Action {
            dx: c(self.dx),
            dy: c(self.dy),
            dz: c(self.dz),
            dtheta: c(self.dtheta),
            open_cmd: c(self.open_cmd),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DoneReason {
    Collision,
    Success,
    StepLimit,
}

#[derive(Debug, Clone)]
pub struct StepInfo {
    pub contacts: Vec<Contact>,
    /// True on the step whose action opened the gripper.
    pub released: bool,
    pub success: bool,
    pub done: Option<DoneReason>,
}

#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub observation: Observation,
    pub reward: RewardBreakdown,
    pub done: bool,
    pub info: StepInfo,
}

/// Fully explicit episode start, used directly by scripted planners and
/// built internally by [`PlacementEnv::reset`].
#[derive(Debug, Clone)]
pub struct ResetScenario {
    pub placing_id: FragmentId,
    /// Poses of the objects already resting on the table.
    pub table_poses: BTreeMap<FragmentId, Pose2>,
    pub ee_x: Scalar,
    pub ee_y: Scalar,
    pub ee_z: Scalar,
    /// EE yaw in degrees.
    pub theta_ee: Scalar,
    /// Grasped object yaw in degrees.
    pub theta_place: Scalar,
    /// Absolute height of the retract goal set at release.
    pub retract_z: Scalar,
}

/// One recorded step; collected when tracing is enabled.
#[derive(Debug, Clone)]
pub struct TraceRow {
    pub step: u32,
    pub q: u8,
    pub ee: EEState,
    /// Placing object pose (grasped or placed).
    pub object: Pose2,
    pub reward: RewardBreakdown,
    /// Contacts joined with '+', empty when none.
    pub contacts: String,
    pub done: bool,
}

#[derive(Debug, Clone)]
struct EpisodeState {
    q: u8,
    ee: EEState,
    placing_id: FragmentId,
    /// Object yaw minus EE yaw, fixed at grasp time.
    theta_offset: Scalar,
    placing_pose: Pose2,
    table_poses: BTreeMap<FragmentId, Pose2>,
    step: u32,
    release_pose: Option<Pose2>,
    drop_point: Option<Point3>,
    retract_goal: Option<Point3>,
    retract_z: Scalar,
    done: Option<DoneReason>,
    success: bool,
}

#[derive(Debug, Clone)]
pub struct PlacementEnv {
    layout: Arc<Layout>,
    config: EnvConfig,
    workspace_center: Point2,
    state: Option<EpisodeState>,
    trace: Option<Vec<TraceRow>>,
}

impl PlacementEnv {
    pub fn new(layout: Arc<Layout>, config: EnvConfig) -> Result<Self, EnvError> {
        config.validate()?;
        layout.validate().map_err(|e| EnvError::Layout(e.to_string()))?;
        let (lo, hi) = layout
            .bounding_box()
            .map_err(|e| EnvError::Layout(e.to_string()))?;
        let workspace_center = Point2::new((lo.x + hi.x) / 2.0, (lo.y + hi.y) / 2.0);
        Ok(PlacementEnv { layout, config, workspace_center, state: None, trace: None })
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn workspace_center(&self) -> Point2 {
        self.workspace_center
    }

    pub fn q(&self) -> Option<u8> {
        self.state.as_ref().map(|s| s.q)
    }

    pub fn ee(&self) -> Option<EEState> {
        self.state.as_ref().map(|s| s.ee)
    }

    pub fn placing_id(&self) -> Option<FragmentId> {
        self.state.as_ref().map(|s| s.placing_id)
    }

    /// Pose of the placing object: tracks the EE while grasped, frozen at the
    /// placed pose afterwards.
    pub fn placing_pose(&self) -> Option<Pose2> {
        self.state.as_ref().map(|s| s.placing_pose)
    }

    pub fn table_poses(&self) -> Option<&BTreeMap<FragmentId, Pose2>> {
        self.state.as_ref().map(|s| &s.table_poses)
    }

    pub fn is_done(&self) -> bool {
        self.state.as_ref().is_some_and(|s| s.done.is_some())
    }

    pub fn enable_trace(&mut self) {
        self.trace = Some(Vec::new());
    }

    pub fn take_trace(&mut self) -> Vec<TraceRow> {
        self.trace.replace(Vec::new()).unwrap_or_default()
    }

    /// Starts an episode for the sequence entry `placing_index`. All earlier
    /// entries sit at their layout poses; the EE spawns per the difficulty
    /// level with seeded object and EE yaws, each uniform in [-90, 90].
    pub fn reset(
        &mut self,
        placing_index: usize,
        level: u32,
        seed: u64,
    ) -> Result<Observation, EnvError> {
        let sequence = &self.layout.sequence;
        let placing_id = *sequence
            .get(placing_index)
            .ok_or(EnvError::BadSequenceIndex { index: placing_index, len: sequence.len() })?;
        let table_poses: BTreeMap<FragmentId, Pose2> = sequence[..placing_index]
            .iter()
            .map(|&id| (id, self.layout.fragment(id).expect("validated layout").layout_pose))
            .collect();

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // Draw order is part of the format: object yaw first, then EE yaw.
        let theta_place = rng.gen_range(-90.0..=90.0);
        let theta_ee = rng.gen_range(-90.0..=90.0);

        let fragment = self.layout.fragment(placing_id).expect("validated layout");
        let params = self.config.curriculum.level_params(level);
        let place = fragment.layout_pose.translation();
        let center = self.workspace_center;
        let t = params.fraction;
        let start_x = place.x + (center.x - place.x) * t;
        let start_y = place.y + (center.y - place.y) * t;
        let seat = self.config.gripper.seated_ee_z(fragment.height);

        self.reset_with(ResetScenario {
            placing_id,
            table_poses,
            ee_x: start_x,
            ee_y: start_y,
            ee_z: seat + params.start_clearance,
            theta_ee,
            theta_place,
            retract_z: params.retract_z,
        })
    }

    /// Starts an episode from an explicit scenario. The EE height saturates
    /// at the seated height for the grasped object and at the workspace
    /// ceiling.
    pub fn reset_with(&mut self, scenario: ResetScenario) -> Result<Observation, EnvError> {
        let fragment = self
            .layout
            .fragment(scenario.placing_id)
            .ok_or(EnvError::UnknownFragment(scenario.placing_id))?;
        if scenario.table_poses.contains_key(&scenario.placing_id) {
            return Err(EnvError::Layout(format!(
                "placing fragment {} cannot already rest on the table",
                scenario.placing_id
            )));
        }
        for id in scenario.table_poses.keys() {
            if self.layout.fragment(*id).is_none() {
                return Err(EnvError::UnknownFragment(*id));
            }
        }
        let vals = [
            scenario.ee_x,
            scenario.ee_y,
            scenario.ee_z,
            scenario.theta_ee,
            scenario.theta_place,
            scenario.retract_z,
        ];
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(EnvError::Config("scenario poses must be finite".into()));
        }

        let seat = self.config.gripper.seated_ee_z(fragment.height);
        let z = scenario.ee_z.max(seat).min(self.config.workspace_z_max);
        let theta_ee = wrap_deg(scenario.theta_ee);
        let theta_place = wrap_deg(scenario.theta_place);
        let ee = EEState {
            x: scenario.ee_x,
            y: scenario.ee_y,
            z,
            theta: theta_ee,
            gripper_open: false,
        };
        self.state = Some(EpisodeState {
            q: 1,
            ee,
            placing_id: scenario.placing_id,
            theta_offset: circular_diff_deg(theta_place, theta_ee),
            placing_pose: Pose2::new(scenario.ee_x, scenario.ee_y, theta_place),
            table_poses: scenario.table_poses,
            step: 0,
            release_pose: None,
            drop_point: None,
            retract_goal: None,
            retract_z: scenario.retract_z,
            done: None,
            success: false,
        });
        if let Some(trace) = &mut self.trace {
            trace.clear();
        }
        Ok(self.observation_now())
    }

    pub fn step(&mut self, action: Action) -> Result<StepOutcome, EnvError> {
        if self.state.is_none() {
            return Err(EnvError::NotReset);
        }
        if self.is_done() {
            return Err(EnvError::EpisodeFinished);
        }
        let a = action.clamped();
        let fragment_height = {
            let st = self.state.as_ref().unwrap();
            self.layout.fragment(st.placing_id).expect("validated layout").height
        };
        let seat = self.config.gripper.seated_ee_z(fragment_height);
        let cx = self.workspace_center.x;
        let cy = self.workspace_center.y;
        let half = self.config.workspace_half_xy;

        // Motion. Translation saturates at the workspace box; descent of a
        // grasped object saturates where it rests on the table.
        {
            let st = self.state.as_mut().unwrap();
            let ee = &mut st.ee;
            ee.x = (ee.x + a.dx * self.config.delta_max).clamp(cx - half, cx + half);
            ee.y = (ee.y + a.dy * self.config.delta_max).clamp(cy - half, cy + half);
            ee.theta = wrap_deg(ee.theta + a.dtheta * self.config.theta_max);
            let mut z = ee.z + a.dz * self.config.delta_max;
            if st.q == 1 {
                z = z.max(seat);
            }
            ee.z = z.clamp(0.0, self.config.workspace_z_max);
            if st.q == 1 {
                st.placing_pose =
                    Pose2::new(ee.x, ee.y, wrap_deg(ee.theta + st.theta_offset));
            }
        }

        // Release decision at the post-motion pose.
        let released = {
            let st = self.state.as_ref().unwrap();
            st.q == 1 && a.open_cmd > 0.0
        };
        let mut release_term = 0.0;
        if released {
            let d_c = self.corner_distance_now();
            let d_l = self.line_distance_now();
            let st = self.state.as_mut().unwrap();
            let d_drop = (st.ee.z - seat).max(0.0) / self.config.h_norm;
            release_term = release_reward(&self.config.reward, d_c, d_l, d_drop);
            let placed = Pose2::new(st.ee.x, st.ee.y, st.placing_pose.theta);
            st.placing_pose = placed;
            st.table_poses.insert(st.placing_id, placed);
            st.release_pose = Some(placed);
            st.drop_point = Some(st.ee.position());
            st.retract_goal = Some(Point3::new(st.ee.x, st.ee.y, st.retract_z));
            st.ee.gripper_open = true;
            st.q = 2;
        }

        // Remaining shaping terms at the post-motion (and post-drop) state.
        let (approach_term, retract_term) = {
            let st = self.state.as_ref().unwrap();
            match (st.q, released) {
                (1, _) => {
                    let d_c = self.corner_distance_now();
                    let d_l = self.line_distance_now();
                    let layout_theta = self
                        .layout
                        .fragment(st.placing_id)
                        .expect("validated layout")
                        .layout_pose
                        .theta;
                    let err = circular_diff_deg(st.placing_pose.theta, layout_theta);
                    (approach_reward(&self.config.reward, d_c, d_l, err), 0.0)
                }
                (2, false) => {
                    let release_pose = st.release_pose.expect("set on the release transition");
                    let current = st.table_poses[&st.placing_id].translation();
                    let moved = release_pose.translation().distance(current);
                    let goal = st.retract_goal.expect("set on the release transition");
                    let dist = goal.distance(st.ee.position());
                    (0.0, retract_reward(&self.config.reward, moved, dist))
                }
                _ => (0.0, 0.0),
            }
        };

        let contacts = self.contacts_now(released);
        let collision_term = collision_penalty(&self.config.reward, &contacts);
        let reward = RewardBreakdown::new(approach_term, release_term, retract_term, collision_term);

        // Termination: collisions dominate, then retract success, then the
        // step budget.
        let (done, success) = {
            let st = self.state.as_mut().unwrap();
            st.step += 1;
            let mut done = None;
            if !contacts.is_empty() {
                done = Some(DoneReason::Collision);
            } else if st.q == 2 {
                let goal = st.retract_goal.expect("set on the release transition");
                if goal.distance(st.ee.position()) <= self.config.eps_retract {
                    done = Some(DoneReason::Success);
                    st.success = true;
                }
            }
            if done.is_none() && st.step >= self.config.n_ep {
                done = Some(DoneReason::StepLimit);
            }
            if done.is_some() {
                st.done = done;
                st.q = 3;
            }
            (done, st.success)
        };

        let observation = self.observation_now();
        let info = StepInfo { contacts, released, success, done };
        if let Some(trace) = &mut self.trace {
            let st = self.state.as_ref().unwrap();
            let joined = info
                .contacts
                .iter()
                .map(|c| c.to_string())
                .collect::<Vec<_>>()
                .join("+");
            trace.push(TraceRow {
                step: st.step,
                q: st.q,
                ee: st.ee,
                object: st.placing_pose,
                reward,
                contacts: joined,
                done: done.is_some(),
            });
        }
        Ok(StepOutcome { observation, reward, done: done.is_some(), info })
    }

    /// Mean corner distance to placed neighbors, normalized by `d_norm`.
    /// Zero when no neighbor has been placed yet.
    pub fn corner_distance(&self) -> Result<Scalar, EnvError> {
        self.state.as_ref().ok_or(EnvError::NotReset)?;
        Ok(self.corner_distance_now())
    }

    /// Mean anchor distance to bordered reference lines, normalized by
    /// `d_norm`. Zero when no line is bordered or lines are disabled.
    pub fn line_distance(&self) -> Result<Scalar, EnvError> {
        self.state.as_ref().ok_or(EnvError::NotReset)?;
        Ok(self.line_distance_now())
    }

    pub fn current_observation(&self) -> Result<Observation, EnvError> {
        self.state.as_ref().ok_or(EnvError::NotReset)?;
        Ok(self.observation_now())
    }

    /// Top plane height of the grasped object.
    fn object_top_z(&self, st: &EpisodeState) -> Scalar {
        st.ee.z - self.config.gripper.palm_clearance
    }

    fn corner_distance_now(&self) -> Scalar {
        let st = self.state.as_ref().expect("caller checked");
        let top_z = self.object_top_z(st);
        let mut acc = 0.0;
        let mut n = 0usize;
        for nb in self.layout.neighbors(st.placing_id) {
            let Some(nb_pose) = st.table_poses.get(&nb) else { continue };
            let pairs = self
                .layout
                .corner_pairs(st.placing_id, nb)
                .expect("adjacency implies corner pairs");
            let nb_top = self.layout.fragment(nb).expect("validated layout").height;
            let mut s = 0.0;
            for pair in pairs {
                let p = st.placing_pose.apply(pair.on_a);
                let t = nb_pose.apply(pair.on_b);
                s += Point3::new(p.x, p.y, top_z).distance(Point3::new(t.x, t.y, nb_top));
            }
            acc += s / 2.0;
            n += 1;
        }
        if n == 0 {
            0.0
        } else {
            acc / n as Scalar / self.config.reward.d_norm
        }
    }

    fn line_distance_now(&self) -> Scalar {
        if !self.config.reward.use_reference_lines {
            return 0.0;
        }
        let st = self.state.as_ref().expect("caller checked");
        let flags = &self.layout.line_flags[&st.placing_id];
        let mut line_means = Vec::with_capacity(2);
        if flags.lx && !flags.lx_anchors.is_empty() {
            let sum: Scalar = flags
                .lx_anchors
                .iter()
                .map(|a| st.placing_pose.apply(*a).y.abs())
                .sum();
            line_means.push(sum / flags.lx_anchors.len() as Scalar);
        }
        if flags.ly && !flags.ly_anchors.is_empty() {
            let sum: Scalar = flags
                .ly_anchors
                .iter()
                .map(|a| st.placing_pose.apply(*a).x.abs())
                .sum();
            line_means.push(sum / flags.ly_anchors.len() as Scalar);
        }
        if line_means.is_empty() {
            0.0
        } else {
            line_means.iter().sum::<Scalar>() / line_means.len() as Scalar / self.config.reward.d_norm
        }
    }

    /// Contact set for the current state. On the step whose action opened the
    /// gripper the just-landed object is checked once at its resting band;
    /// after that it is inert and only the finger checks (which skip the
    /// episode's own fragment) remain.
    fn contacts_now(&self, just_released: bool) -> Vec<Contact> {
        let st = self.state.as_ref().expect("caller checked");
        let placing_fragment = self.layout.fragment(st.placing_id).expect("validated layout");
        let placing = if st.q == 1 {
            let top = self.object_top_z(st);
            Some(Body {
                id: st.placing_id,
                shape: &placing_fragment.shape,
                pose: st.placing_pose,
                z_lo: top - placing_fragment.height,
                z_hi: top,
            })
        } else if just_released {
            Some(Body {
                id: st.placing_id,
                shape: &placing_fragment.shape,
                pose: st.placing_pose,
                z_lo: 0.0,
                z_hi: placing_fragment.height,
            })
        } else {
            None
        };
        let tables: Vec<Body<'_>> = st
            .table_poses
            .iter()
            .filter(|(id, _)| **id != st.placing_id)
            .map(|(id, pose)| {
                let f = self.layout.fragment(*id).expect("validated layout");
                Body { id: *id, shape: &f.shape, pose: *pose, z_lo: 0.0, z_hi: f.height }
            })
            .collect();
        let query = CollisionQuery {
            placing,
            tables,
            ee_x: st.ee.x,
            ee_y: st.ee.y,
            ee_z: st.ee.z,
            ee_theta: st.ee.theta,
            gripper: &self.config.gripper,
        };
        check_collisions(&query)
    }

    fn observation_now(&self) -> Observation {
        let st = self.state.as_ref().expect("caller checked");
        let mut corner_displacements = Vec::new();
        let mut line_displacements = [Vec::new(), Vec::new()];
        let mut borders_line = false;
        if st.q == 1 {
            let top_z = self.object_top_z(st);
            for nb in self.layout.neighbors(st.placing_id) {
                let Some(nb_pose) = st.table_poses.get(&nb) else { continue };
                let pairs = self
                    .layout
                    .corner_pairs(st.placing_id, nb)
                    .expect("adjacency implies corner pairs");
                let nb_top = self.layout.fragment(nb).expect("validated layout").height;
                let disp = |pair: &crate::dataset::CornerPair| {
                    let p = st.placing_pose.apply(pair.on_a);
                    let t = nb_pose.apply(pair.on_b);
                    Point3::new(t.x - p.x, t.y - p.y, nb_top - top_z)
                };
                corner_displacements.push([disp(&pairs[0]), disp(&pairs[1])]);
            }
            if self.config.reward.use_reference_lines {
                let flags = &self.layout.line_flags[&st.placing_id];
                borders_line = flags.borders_any();
                if flags.lx {
                    line_displacements[0] = flags
                        .lx_anchors
                        .iter()
                        .map(|a| {
                            let w = st.placing_pose.apply(*a);
                            Point3::new(0.0, -w.y, 0.0)
                        })
                        .collect();
                }
                if flags.ly {
                    line_displacements[1] = flags
                        .ly_anchors
                        .iter()
                        .map(|a| {
                            let w = st.placing_pose.apply(*a);
                            Point3::new(-w.x, 0.0, 0.0)
                        })
                        .collect();
                }
            }
        }
        let inputs = ObservationInputs {
            q: st.q,
            corner_displacements,
            line_displacements,
            ee: (st.ee.x, st.ee.y, st.ee.z, st.ee.theta),
            retract_goal: st.retract_goal,
            obj_theta: (st.q == 1).then_some(st.placing_pose.theta),
            borders_line,
            workspace_center: self.workspace_center,
            workspace_half_xy: self.config.workspace_half_xy,
            workspace_z_max: self.config.workspace_z_max,
            d_norm: self.config.reward.d_norm,
        };
        build_observation(&inputs)
    }
}
