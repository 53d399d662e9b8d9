//! Record of one layout assembled by one agent.

use std::collections::BTreeMap;

use crate::dataset::{FragmentId, Layout};
use crate::env::Contact;
use crate::Pose2;

use super::EvalError;

/// Which agent produced an assembly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AgentTag {
    /// Learned policy with reference lines.
    Our,
    /// Learned policy with reference lines disabled.
    NoLines,
    /// Scaling baseline.
    Bl1,
    /// Footprint-shift baseline.
    Bl2,
    /// Fragments teleported to their layout poses; scores the metric floor.
    Oracle,
}

impl AgentTag {
    pub fn label(self) -> &'static str {
        match self {
            AgentTag::Our => "OUR",
            AgentTag::NoLines => "NO-L",
            AgentTag::Bl1 => "BL1",
            AgentTag::Bl2 => "BL2",
            AgentTag::Oracle => "ORACLE",
        }
    }
}

impl std::fmt::Display for AgentTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// A contact that ended one placement episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CollisionEvent {
    pub fragment: FragmentId,
    pub contact: Contact,
}

/// Outcome of assembling one layout. Fragments whose approach collided were
/// never released and have no placed pose; everything else does, including
/// drops that landed in contact.
#[derive(Debug, Clone, PartialEq)]
pub struct AssemblyResult {
    /// Seed of the generator config that produced the layout.
    pub layout_seed: u64,
    pub tag: AgentTag,
    pub placed: BTreeMap<FragmentId, Pose2>,
    pub collisions: Vec<CollisionEvent>,
    /// Whether each fragment's episode finished with a clean retraction.
    pub success: BTreeMap<FragmentId, bool>,
}

impl AssemblyResult {
    pub fn collision_free(&self) -> bool {
        self.collisions.is_empty()
    }

    pub fn all_successful(&self) -> bool {
        !self.success.is_empty() && self.success.values().all(|s| *s)
    }

    /// Every fragment of the layout sequence must be accounted for: either
    /// it rests at a placed pose or a collision event explains its absence.
    pub fn validate(&self, layout: &Layout) -> Result<(), EvalError> {
        for &id in &layout.sequence {
            let covered = self.placed.contains_key(&id)
                || self.collisions.iter().any(|c| c.fragment == id);
            if !covered {
                return Err(EvalError::IncompleteResult { fragment: id });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::fixtures::two_square_layout;

    #[test]
    fn tags_print_their_table_labels() {
        assert_eq!(AgentTag::Our.to_string(), "OUR");
        assert_eq!(AgentTag::NoLines.to_string(), "NO-L");
        assert_eq!(AgentTag::Bl1.to_string(), "BL1");
        assert_eq!(AgentTag::Bl2.to_string(), "BL2");
        assert_eq!(AgentTag::Oracle.to_string(), "ORACLE");
    }

    #[test]
    fn validation_requires_a_pose_or_a_collision_per_fragment() {
        let layout = two_square_layout();
        let mut result = AssemblyResult {
            layout_seed: layout.config.seed,
            tag: AgentTag::Bl1,
            placed: BTreeMap::new(),
            collisions: vec![],
            success: BTreeMap::new(),
        };
        assert!(matches!(
            result.validate(&layout),
            Err(EvalError::IncompleteResult { fragment: 0 })
        ));

        result.placed.insert(0, Pose2::new(50.0, 50.0, 0.0));
        assert!(matches!(
            result.validate(&layout),
            Err(EvalError::IncompleteResult { fragment: 1 })
        ));

        // A collision event is an acceptable substitute for a pose.
        result.collisions.push(CollisionEvent {
            fragment: 1,
            contact: Contact::Gripper { other: 0 },
        });
        result.validate(&layout).unwrap();
        assert!(!result.collision_free());
        assert!(!result.all_successful());
    }
}
