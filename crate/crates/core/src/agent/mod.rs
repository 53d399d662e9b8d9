//! Learning stack: networks, squashed-Gaussian policy, truncated quantile
//! critics, replay, the training loop, and checkpoint I/O.

pub mod checkpoint;
pub mod nn;
pub mod policy;
pub mod replay;
pub mod tqc;
pub mod trainer;

pub use checkpoint::{load_checkpoint, save_checkpoint, LoadedCheckpoint, TrainState};
pub use policy::SquashedGaussianPolicy;
pub use replay::{Batch, ReplayBuffer, Transition, ACT_DIM};
pub use tqc::{StepDiagnostics, TqcLearner, TrainConfig};
pub use trainer::{evaluate, train, EvalPoint, TrainReport, TrainerOptions};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("non-finite loss: {0}")]
    NonFinite(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("io: {0}")]
    Io(String),
    #[error(transparent)]
    Env(#[from] crate::env::EnvError),
}
