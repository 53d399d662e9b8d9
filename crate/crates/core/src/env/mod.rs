//! Kinematic pick-and-place environment.
//!
//! Episodes walk a task-state machine: q = 0 (grasp, modeled as instantaneous
//! attachment during reset), q = 1 (maneuver the grasped object), q = 2
//! (retract after release), q = 3 (finished). Rewards shape the approach
//! toward placed neighbors and reference lines, grant a one-off release
//! bonus, and penalize collisions, which also terminate the episode.

mod collision;
mod config;
mod environment;
mod observation;
mod rewards;

pub use collision::{check_collisions, finger_footprints, Body, CollisionQuery, Contact};
pub use config::{CurriculumConfig, CurriculumLevel, EnvConfig, GripperModel, RewardConfig};
pub use environment::{
    Action, DoneReason, EEState, PlacementEnv, ResetScenario, StepInfo, StepOutcome, TraceRow,
};
pub use observation::{
    build_observation, Observation, ObservationInputs, CORNER_BLOCK, EE_BLOCK, LINE_BLOCK,
    LINE_BOOL_IDX, OBS_LEN, OBJ_THETA_IDX, RETRACT_BLOCK, TASK_STATE_IDX,
};
pub use rewards::{
    approach_reward, collision_penalty, release_reward, retract_reward, RewardBreakdown,
};

#[derive(Debug, Clone, thiserror::Error)]
pub enum EnvError {
    #[error("invalid environment config: {0}")]
    Config(String),
    #[error("layout unusable for the environment: {0}")]
    Layout(String),
    #[error("environment was never reset")]
    NotReset,
    #[error("episode already finished; reset before stepping")]
    EpisodeFinished,
    #[error("fragment {0} does not exist in the layout")]
    UnknownFragment(crate::dataset::FragmentId),
    #[error("sequence index {index} out of range for {len} fragments")]
    BadSequenceIndex { index: usize, len: usize },
    #[error("geometry error: {0}")]
    Geometry(#[from] crate::geom::GeomError),
}
