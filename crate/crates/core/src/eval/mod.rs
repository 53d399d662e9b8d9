//! Assembly outcome records, the compactness metrics computed over them, and
//! the batch evaluation that turns a set of layouts into a scored report.

mod metrics;
mod suite;
mod types;

pub use metrics::{
    metric_angle_diff, metric_bb_increase, metric_bb_increase_centroids, metric_collision_rate,
    metric_mean_object_distance, register_placed,
};
pub use suite::{
    evaluate_suite, write_layout_rows, write_summary, AgentSource, LayoutRow, MetricReport,
    SuiteOptions, SuiteOutcome, Summary,
};
pub use types::{AgentTag, AssemblyResult, CollisionEvent};

use crate::dataset::FragmentId;

#[derive(Debug, Clone, thiserror::Error)]
pub enum EvalError {
    #[error("fragment {fragment} has neither a placed pose nor a collision event")]
    IncompleteResult { fragment: FragmentId },
    #[error("metric needs at least one placed fragment")]
    NothingPlaced,
    #[error("mean object distance needs at least two placed fragments, got {got}")]
    TooFewPlaced { got: usize },
    #[error("layout centroids of the placed set are collinear; centroid box has no area")]
    DegenerateReference,
    #[error("collision rate needs at least one placement episode")]
    NoEpisodes,
    #[error("result references fragment {0} which the layout does not contain")]
    UnknownFragment(FragmentId),
    #[error("evaluation needs at least one layout")]
    NoLayouts,
    #[error("geometry error: {0}")]
    Geometry(#[from] crate::geom::GeomError),
    #[error("environment error: {0}")]
    Env(#[from] crate::env::EnvError),
    #[error("baseline error: {0}")]
    Baseline(#[from] crate::baselines::BaselineError),
    #[error("io error: {0}")]
    Io(String),
}
