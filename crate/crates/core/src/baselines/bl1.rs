//! Scaling baseline: spread the layout about its centroid until the
//! scripted execution runs contact-free.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::dataset::{FragmentId, Layout};
use crate::env::EnvConfig;
use crate::eval::AgentTag;
use crate::{Pose2, Scalar};

use super::executor::execute_plan;
use super::{plan_from_targets, BaselineError, PlacementPlan, PlanMethod};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Bl1Params {
    /// Scale grows by this per step: scale = 1 + alpha_b * k.
    pub alpha_b: Scalar,
    pub k_max: u32,
}

impl Default for Bl1Params {
    fn default() -> Self {
        Bl1Params { alpha_b: 0.1, k_max: 50 }
    }
}

/// Tries k = 1, 2, ... and returns the first plan whose execution records no
/// contact at all. Positions move away from the area centroid by the scale
/// factor; orientations are kept verbatim. The returned plan is minimal by
/// construction: every smaller k was executed and collided.
pub fn bl1_plan(
    layout: &Arc<Layout>,
    config: &EnvConfig,
    yaws: &BTreeMap<FragmentId, Scalar>,
    params: &Bl1Params,
) -> Result<PlacementPlan, BaselineError> {
    if !(params.alpha_b.is_finite() && params.alpha_b > 0.0) || params.k_max == 0 {
        return Err(BaselineError::BadParameter(
            "scaling needs alpha_b > 0 and k_max >= 1".into(),
        ));
    }
    if layout.fragments.is_empty() {
        return Err(BaselineError::EmptyLayout);
    }
    let center = layout.area_centroid();
    for k in 1..=params.k_max {
        let scale = 1.0 + params.alpha_b * k as Scalar;
        let plan = plan_from_targets(
            layout,
            yaws,
            |f| {
                let p = f.layout_pose.translation();
                Pose2::new(
                    center.x + scale * (p.x - center.x),
                    center.y + scale * (p.y - center.y),
                    f.layout_pose.theta,
                )
            },
            PlanMethod::Scaling { k, scale },
        )?;
        let result = execute_plan(layout, config, &plan, AgentTag::Bl1)?;
        if result.collision_free() {
            return Ok(plan);
        }
    }
    Err(BaselineError::NoCollisionFreeScale { k_max: params.k_max })
}
