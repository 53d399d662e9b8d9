//! Scripted, open-loop execution of placement plans through the environment.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::dataset::Layout;
use crate::env::{Action, EnvConfig, PlacementEnv, ResetScenario};
use crate::eval::{AgentTag, AssemblyResult, CollisionEvent};
use crate::geom::wrap_deg;
use crate::Scalar;

use super::{BaselineError, PlacementPlan};

/// Scripted-motion settings: how high above the seated pose each approach
/// starts and the height the EE retreats to after opening.
#[derive(Debug, Clone, PartialEq)]
pub struct ExecOptions {
    pub approach_clearance: Scalar,
    pub retract_z: Scalar,
}

impl Default for ExecOptions {
    fn default() -> Self {
        ExecOptions { approach_clearance: 30.0, retract_z: 80.0 }
    }
}

/// Executes a plan with the default scripted motion.
pub fn execute_plan(
    layout: &Arc<Layout>,
    config: &EnvConfig,
    plan: &PlacementPlan,
    tag: AgentTag,
) -> Result<AssemblyResult, BaselineError> {
    execute_plan_with(layout, config, plan, tag, &ExecOptions::default())
}

/// For each placement in order: spawn holding the fragment straight above
/// its target, descend until the object sits on the table, open the gripper
/// and retract vertically. Contacts end that fragment's episode and are
/// recorded instead of raised; later fragments still run against everything
/// released so far. The whole procedure is deterministic in the plan.
pub fn execute_plan_with(
    layout: &Arc<Layout>,
    config: &EnvConfig,
    plan: &PlacementPlan,
    tag: AgentTag,
    opts: &ExecOptions,
) -> Result<AssemblyResult, BaselineError> {
    let mut env = PlacementEnv::new(layout.clone(), config.clone())?;
    let mut placed = BTreeMap::new();
    let mut collisions = Vec::new();
    let mut success = BTreeMap::new();

    for p in &plan.placements {
        let fragment = layout
            .fragment(p.id)
            .ok_or(crate::env::EnvError::UnknownFragment(p.id))?;
        let seat = config.gripper.seated_ee_z(fragment.height);
        env.reset_with(ResetScenario {
            placing_id: p.id,
            table_poses: placed.clone(),
            ee_x: p.target.x,
            ee_y: p.target.y,
            ee_z: seat + opts.approach_clearance,
            theta_ee: wrap_deg(p.target.theta + p.grasp_yaw),
            theta_place: p.target.theta,
            retract_z: opts.retract_z,
        })?;

        let mut released = false;
        let outcome = loop {
            let z = env.ee().expect("episode just reset").z;
            let action = if !released {
                if z > seat + 1e-9 {
                    Action { dz: -1.0, ..Action::ZERO }
                } else {
                    Action { open_cmd: 1.0, ..Action::ZERO }
                }
            } else {
                Action { dz: 1.0, ..Action::ZERO }
            };
            let out = env.step(action)?;
            released |= out.info.released;
            for &contact in &out.info.contacts {
                collisions.push(CollisionEvent { fragment: p.id, contact });
            }
            if out.done {
                break out;
            }
        };

        if released {
            // The drop pose the environment recorded; collisions after the
            // release leave the object on the table regardless.
            let pose = env.table_poses().expect("episode ran")[&p.id];
            placed.insert(p.id, pose);
        }
        success.insert(p.id, outcome.info.success);
    }

    Ok(AssemblyResult { layout_seed: layout.config.seed, tag, placed, collisions, success })
}
