//! Episode loop wiring the learner to placement environments.
//!
//! Single-threaded and fully deterministic given the seed: layout and
//! placing-object selection, reset draws, exploration noise, and replay
//! sampling all come from one seeded generator. Evaluation runs greedy
//! (squashed-mean) actions on a fixed round-robin of placing objects and
//! drives the curriculum level.

use std::fs::File;
use std::io::{BufWriter, Write as _};
use std::path::PathBuf;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::checkpoint::{load_checkpoint, save_checkpoint, TrainState};
use super::replay::{ReplayBuffer, Transition, ACT_DIM};
use super::tqc::{StepDiagnostics, TqcLearner, TrainConfig};
use super::AgentError;
use crate::dataset::Layout;
use crate::env::{Action, EnvConfig, PlacementEnv, OBS_LEN};
use crate::Scalar;

#[derive(Debug, Clone, Default)]
pub struct TrainerOptions {
    /// Per-episode training log destination.
    pub log_csv: Option<PathBuf>,
    /// Written at every curriculum promotion and at the end of training.
    pub checkpoint_path: Option<PathBuf>,
    /// Ends training as soon as the curriculum reaches this level.
    pub stop_at_level: Option<u32>,
    /// Continue from this checkpoint: learner, curriculum level, step and
    /// episode counters, and the loop generator are all restored. The replay
    /// buffer is not checkpointed and refills from fresh experience.
    pub resume_from: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalPoint {
    pub step: u64,
    pub success_rate: Scalar,
    pub mean_return: Scalar,
    /// Level the evaluation ran at (before any promotion it causes).
    pub level: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub steps: u64,
    pub episodes: u64,
    pub final_level: u32,
    pub evals: Vec<EvalPoint>,
    pub stopped_early: bool,
}

/// Greedy-policy success rate and mean return over a deterministic episode
/// roster: episode `e` uses layout `e % n` and walks the placing sequence.
pub fn evaluate(
    learner: &TqcLearner,
    envs: &mut [PlacementEnv],
    level: u32,
    episodes: usize,
    seed_base: u64,
) -> Result<(Scalar, Scalar), AgentError> {
    let mut successes = 0usize;
    let mut return_sum = 0.0;
    for e in 0..episodes {
        let li = e % envs.len();
        let seq_len = envs[li].layout().sequence.len();
        let idx = (e / envs.len()) % seq_len;
        let mut obs = envs[li].reset(idx, level, seed_base.wrapping_add(e as u64))?;
        loop {
            let a = learner.deterministic_action(&obs);
            let out = envs[li].step(Action::from_array([a[0], a[1], a[2], a[3], a[4]]))?;
            return_sum += out.reward.total;
            obs = out.observation;
            if out.done {
                if out.info.success {
                    successes += 1;
                }
                break;
            }
        }
    }
    Ok((successes as Scalar / episodes as Scalar, return_sum / episodes as Scalar))
}

struct CsvLog {
    writer: Option<BufWriter<File>>,
}

impl CsvLog {
    fn open(path: &Option<PathBuf>) -> Result<Self, AgentError> {
        let writer = match path {
            Some(p) => {
                if let Some(dir) = p.parent() {
                    if !dir.as_os_str().is_empty() {
                        std::fs::create_dir_all(dir)
                            .map_err(|e| AgentError::Io(format!("{}: {e}", dir.display())))?;
                    }
                }
                let mut w = BufWriter::new(
                    File::create(p).map_err(|e| AgentError::Io(format!("{}: {e}", p.display())))?,
                );
                writeln!(w, "episode,step,return,eval_success,level,critic_loss,actor_loss,alpha")
                    .map_err(|e| AgentError::Io(e.to_string()))?;
                Some(w)
            }
            None => None,
        };
        Ok(Self { writer })
    }

    #[allow(clippy::too_many_arguments)]
    fn row(
        &mut self,
        episode: u64,
        step: u64,
        ep_return: Scalar,
        eval_success: Scalar,
        level: u32,
        diag: &StepDiagnostics,
    ) -> Result<(), AgentError> {
        if let Some(w) = &mut self.writer {
            writeln!(
                w,
                "{episode},{step},{ep_return:.6},{eval_success:.4},{level},{:.6},{:.6},{:.6}",
                diag.critic_loss, diag.actor_loss, diag.alpha
            )
            .map_err(|e| AgentError::Io(e.to_string()))?;
        }
        Ok(())
    }

    fn finish(mut self) -> Result<(), AgentError> {
        if let Some(w) = &mut self.writer {
            w.flush().map_err(|e| AgentError::Io(e.to_string()))?;
        }
        Ok(())
    }
}

pub fn train(
    layouts: &[Arc<Layout>],
    env_cfg: &EnvConfig,
    cfg: &TrainConfig,
    opts: &TrainerOptions,
) -> Result<(TqcLearner, TrainReport), AgentError> {
    cfg.validate()?;
    if layouts.is_empty() {
        return Err(AgentError::Config("need at least one layout".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut learner = TqcLearner::new(OBS_LEN, ACT_DIM, cfg.clone(), &mut rng)?;
    let mut envs: Vec<PlacementEnv> = layouts
        .iter()
        .map(|l| PlacementEnv::new(l.clone(), env_cfg.clone()))
        .collect::<Result<_, _>>()?;
    let mut buffer = ReplayBuffer::new(cfg.buffer_capacity);
    let mut log = CsvLog::open(&opts.log_csv)?;

    let mut level = 0u32;
    let mut steps = 0u64;
    let mut episodes = 0u64;
    if let Some(path) = &opts.resume_from {
        // The restored learner keeps the architecture embedded in the file;
        // `cfg` still drives the loop schedule (budget, cadence, warmup).
        let loaded = load_checkpoint(path)?;
        learner = loaded.learner;
        level = loaded.level;
        steps = loaded.env_steps;
        episodes = loaded.episodes;
        rng = loaded.rng;
    }
    let mut evals = Vec::new();
    let mut eval_round = 0u64;
    let mut next_eval = cfg.eval_every;
    while next_eval <= steps {
        next_eval += cfg.eval_every;
    }
    let mut last_eval_success = 0.0;
    let mut last_diag = StepDiagnostics {
        critic_loss: 0.0,
        actor_loss: 0.0,
        alpha_loss: 0.0,
        alpha: learner.alpha(),
        mean_logp: 0.0,
    };
    let mut stopped_early = false;

    'outer: while steps < cfg.total_steps {
        let li = rng.gen_range(0..envs.len());
        let idx = rng.gen_range(0..layouts[li].sequence.len());
        let reset_seed: u64 = rng.gen();
        let mut obs = envs[li].reset(idx, level, reset_seed)?;
        let mut ep_return = 0.0;
        loop {
            let action: [Scalar; ACT_DIM] = if steps < cfg.warmup_steps {
                std::array::from_fn(|_| rng.gen_range(-1.0..=1.0))
            } else {
                let a = learner.explore_action(&obs, &mut rng);
                [a[0], a[1], a[2], a[3], a[4]]
            };
            let out = envs[li].step(Action::from_array(action))?;
            steps += 1;
            ep_return += out.reward.total;
            use crate::env::DoneReason;
            let terminal = matches!(
                out.info.done,
                Some(DoneReason::Collision) | Some(DoneReason::Success)
            );
            buffer.push(Transition {
                obs,
                action,
                reward: out.reward.total,
                next_obs: out.observation,
                done: terminal,
            });
            obs = out.observation;
            if steps >= cfg.warmup_steps && buffer.len() >= cfg.batch_size {
                let batch = buffer.sample(cfg.batch_size, &mut rng);
                last_diag = learner.train_step(&batch, &mut rng)?;
            }
            if out.done || steps >= cfg.total_steps {
                break;
            }
        }
        episodes += 1;
        log.row(episodes, steps, ep_return, last_eval_success, level, &last_diag)?;

        if steps >= next_eval || steps >= cfg.total_steps {
            while next_eval <= steps {
                next_eval += cfg.eval_every;
            }
            let seed_base = 0xE7A1_0000u64.wrapping_add(eval_round << 20);
            eval_round += 1;
            let (rate, mean_return) =
                evaluate(&learner, &mut envs, level, cfg.eval_episodes, seed_base)?;
            last_eval_success = rate;
            evals.push(EvalPoint { step: steps, success_rate: rate, mean_return, level });
            let promoted = env_cfg.curriculum.update_level(level, rate);
            if promoted != level {
                level = promoted;
                if let Some(path) = &opts.checkpoint_path {
                    save_checkpoint(
                        path,
                        &TrainState {
                            learner: &learner,
                            level,
                            env_steps: steps,
                            episodes,
                            rng: &rng,
                        },
                    )?;
                }
            }
            if let Some(stop) = opts.stop_at_level {
                if level >= stop {
                    stopped_early = true;
                    break 'outer;
                }
            }
        }
    }

    if let Some(path) = &opts.checkpoint_path {
        save_checkpoint(
            path,
            &TrainState { learner: &learner, level, env_steps: steps, episodes, rng: &rng },
        )?;
    }
    log.finish()?;

    let report = TrainReport { steps, episodes, final_level: level, evals, stopped_early };
    Ok((learner, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::fixtures::two_square_layout;

    fn quick_cfg() -> TrainConfig {
        TrainConfig {
            hidden: vec![8, 8],
            batch_size: 16,
            buffer_capacity: 2000,
            warmup_steps: 150,
            total_steps: 600,
            eval_every: 250,
            eval_episodes: 4,
            seed: 11,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn training_is_deterministic_for_a_fixed_seed() {
        let layouts = vec![Arc::new(two_square_layout())];
        let env_cfg = EnvConfig::default();
        let dir = tempfile::tempdir().unwrap();
        let run = |tag: &str| {
            let opts = TrainerOptions {
                log_csv: Some(dir.path().join(format!("log_{tag}.csv"))),
                ..TrainerOptions::default()
            };
            let (learner, report) = train(&layouts, &env_cfg, &quick_cfg(), &opts).unwrap();
            (learner.policy.net.flatten(), report)
        };
        let (p1, r1) = run("a");
        let (p2, r2) = run("b");
        assert_eq!(p1, p2);
        assert_eq!(r1, r2);
        let l1 = std::fs::read(dir.path().join("log_a.csv")).unwrap();
        let l2 = std::fs::read(dir.path().join("log_b.csv")).unwrap();
        assert_eq!(l1, l2, "training log must be byte-identical");
        assert!(r1.steps >= 600);
        assert!(r1.episodes > 0);
        assert!(!r1.evals.is_empty());
    }

    #[test]
    fn log_has_header_and_episode_rows() {
        let layouts = vec![Arc::new(two_square_layout())];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("log.csv");
        let cfg = TrainConfig { total_steps: 120, warmup_steps: 200, ..quick_cfg() };
        let opts = TrainerOptions { log_csv: Some(path.clone()), ..TrainerOptions::default() };
        let (_, report) = train(&layouts, &EnvConfig::default(), &cfg, &opts).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "episode,step,return,eval_success,level,critic_loss,actor_loss,alpha"
        );
        assert_eq!(lines.count() as u64, report.episodes);
    }

    #[test]
    fn resume_restores_the_level_and_counters() {
        let layouts = vec![Arc::new(two_square_layout())];
        let dir = tempfile::tempdir().unwrap();
        let ckpt = dir.path().join("mid.json");

        // Hand-build a mid-training checkpoint at level 3, 500 steps in.
        let cfg = quick_cfg();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let learner = TqcLearner::new(OBS_LEN, ACT_DIM, cfg.clone(), &mut rng).unwrap();
        save_checkpoint(
            &ckpt,
            &TrainState { learner: &learner, level: 3, env_steps: 500, episodes: 17, rng: &rng },
        )
        .unwrap();

        // No evaluation fires in the remaining budget, so the level must
        // come out exactly as stored while the step counter runs on.
        let cfg = TrainConfig { total_steps: 550, eval_every: 100_000, ..cfg };
        let opts =
            TrainerOptions { resume_from: Some(ckpt), ..TrainerOptions::default() };
        let (_, report) = train(&layouts, &EnvConfig::default(), &cfg, &opts).unwrap();
        assert_eq!(report.final_level, 3);
        assert!(report.steps >= 550);
        assert!(report.episodes > 17);
    }

    #[test]
    fn evaluation_is_repeatable() {
        let layouts = vec![Arc::new(two_square_layout())];
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let learner = TqcLearner::new(
            OBS_LEN,
            ACT_DIM,
            TrainConfig { hidden: vec![8, 8], ..TrainConfig::default() },
            &mut rng,
        )
        .unwrap();
        let mut envs =
            vec![PlacementEnv::new(layouts[0].clone(), EnvConfig::default()).unwrap()];
        let a = evaluate(&learner, &mut envs, 0, 6, 42).unwrap();
        let b = evaluate(&learner, &mut envs, 0, 6, 42).unwrap();
        assert_eq!(a, b);
        assert!((0.0..=1.0).contains(&a.0));
    }
}
