//! Versioned JSON checkpoints for the learner and training loop state.
//!
//! A checkpoint is self-contained: network parameters, optimizer moments,
//! temperature, curriculum level, step counters, and the loop's generator
//! state. Loading rebuilds the learner from the embedded config and verifies
//! every parameter block length, so a file from a different architecture
//! fails with a message instead of a panic.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::nn::ScalarAdam;
use super::tqc::{TqcLearner, TrainConfig};
use super::AgentError;
use crate::Scalar;

pub const CHECKPOINT_VERSION: u32 = 1;

/// Borrowed view of everything a checkpoint captures.
pub struct TrainState<'a> {
    pub learner: &'a TqcLearner,
    pub level: u32,
    pub env_steps: u64,
    pub episodes: u64,
    pub rng: &'a ChaCha8Rng,
}

/// Owned result of loading a checkpoint.
#[derive(Debug)]
pub struct LoadedCheckpoint {
    pub learner: TqcLearner,
    pub level: u32,
    pub env_steps: u64,
    pub episodes: u64,
    pub rng: ChaCha8Rng,
}

#[derive(Serialize, Deserialize)]
struct OptState {
    m: Vec<Vec<Scalar>>,
    v: Vec<Vec<Scalar>>,
    t: u64,
}

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    version: u32,
    obs_dim: usize,
    act_dim: usize,
    config: TrainConfig,
    policy: Vec<Scalar>,
    critics: Vec<Vec<Scalar>>,
    targets: Vec<Vec<Scalar>>,
    log_alpha: Scalar,
    opt_policy: OptState,
    opt_critics: Vec<OptState>,
    opt_alpha: ScalarAdam,
    level: u32,
    env_steps: u64,
    episodes: u64,
    rng: ChaCha8Rng,
}

fn opt_state(adam: &super::nn::Adam<Scalar>) -> OptState {
    let (m, v, t) = adam.state_arrays();
    OptState { m, v, t }
}

pub fn save_checkpoint(path: &Path, state: &TrainState) -> Result<(), AgentError> {
    let l = state.learner;
    let file = CheckpointFile {
        version: CHECKPOINT_VERSION,
        obs_dim: l.obs_dim(),
        act_dim: l.act_dim(),
        config: l.cfg.clone(),
        policy: l.policy.net.flatten(),
        critics: l.critics.iter().map(|c| c.flatten()).collect(),
        targets: l.targets.iter().map(|t| t.flatten()).collect(),
        log_alpha: l.log_alpha,
        opt_policy: opt_state(&l.opt_policy),
        opt_critics: l.opt_critics.iter().map(opt_state).collect(),
        opt_alpha: l.opt_alpha.clone(),
        level: state.level,
        env_steps: state.env_steps,
        episodes: state.episodes,
        rng: state.rng.clone(),
    };
    let json = serde_json::to_string(&file).map_err(|e| AgentError::Checkpoint(e.to_string()))?;
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)
                .map_err(|e| AgentError::Io(format!("{}: {e}", dir.display())))?;
        }
    }
    std::fs::write(path, json).map_err(|e| AgentError::Io(format!("{}: {e}", path.display())))
}

pub fn load_checkpoint(path: &Path) -> Result<LoadedCheckpoint, AgentError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| AgentError::Io(format!("{}: {e}", path.display())))?;
    let file: CheckpointFile =
        serde_json::from_str(&text).map_err(|e| AgentError::Checkpoint(e.to_string()))?;
    if file.version != CHECKPOINT_VERSION {
        return Err(AgentError::Checkpoint(format!(
            "unsupported checkpoint version {} (expected {CHECKPOINT_VERSION})",
            file.version
        )));
    }
    // Architecture comes from the embedded config; parameter blocks must fit.
    let mut seed_rng = ChaCha8Rng::seed_from_u64(0);
    let mut learner = TqcLearner::new(file.obs_dim, file.act_dim, file.config, &mut seed_rng)?;
    let check = |name: &str, want: usize, got: usize| -> Result<(), AgentError> {
        if want != got {
            return Err(AgentError::Checkpoint(format!(
                "{name}: expected {want} parameters, file holds {got}"
            )));
        }
        Ok(())
    };
    check("policy", learner.policy.net.n_params(), file.policy.len())?;
    learner.policy.net.set_from_flat(&file.policy);
    if file.critics.len() != learner.critics.len() || file.targets.len() != learner.targets.len() {
        return Err(AgentError::Checkpoint("critic count mismatch".into()));
    }
    for (i, flat) in file.critics.iter().enumerate() {
        check(&format!("critic {i}"), learner.critics[i].n_params(), flat.len())?;
        learner.critics[i].set_from_flat(flat);
    }
    for (i, flat) in file.targets.iter().enumerate() {
        check(&format!("target {i}"), learner.targets[i].n_params(), flat.len())?;
        learner.targets[i].set_from_flat(flat);
    }
    learner.log_alpha = file.log_alpha;
    let restore = |adam: &mut super::nn::Adam<Scalar>,
                   s: &OptState,
                   name: &str|
     -> Result<(), AgentError> {
        let total: usize = s.m.iter().map(|v| v.len()).sum();
        let want: usize = adam.state_arrays().0.iter().map(|v| v.len()).sum();
        check(name, want, total)?;
        adam.restore_state(&s.m, &s.v, s.t);
        Ok(())
    };
    restore(&mut learner.opt_policy, &file.opt_policy, "policy optimizer")?;
    if file.opt_critics.len() != learner.opt_critics.len() {
        return Err(AgentError::Checkpoint("critic optimizer count mismatch".into()));
    }
    for (i, s) in file.opt_critics.iter().enumerate() {
        restore(&mut learner.opt_critics[i], s, &format!("critic optimizer {i}"))?;
    }
    learner.opt_alpha = file.opt_alpha;
    Ok(LoadedCheckpoint {
        learner,
        level: file.level,
        env_steps: file.env_steps,
        episodes: file.episodes,
        rng: file.rng,
    })
}
