//! Distributional critic learner with truncated quantile pooling.
//!
//! Two quantile critics are trained against a shared target built by pooling
//! both target critics' atoms at the next state, sorting, dropping the top
//! atoms, and Bellman-mapping the rest. The actor maximizes the truncated
//! mean of the pooled online atoms minus an entropy temperature term; the
//! temperature tracks a fixed target entropy. All gradients are hand-derived
//! and checked against finite differences.

use ndarray::{concatenate, Array1, Array2, Axis};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::nn::{Adam, Mlp, MlpGrads, ScalarAdam};
use super::policy::SquashedGaussianPolicy;
use super::replay::Batch;
use super::AgentError;
use crate::Scalar;

fn default_hidden() -> Vec<usize> {
    vec![128, 128, 128]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub n_critics: usize,
    pub n_quantiles: usize,
    /// Atoms dropped per critic when building targets (total drop is
    /// `n_critics * drop_per_critic`).
    pub drop_per_critic: usize,
    pub buffer_capacity: usize,
    pub batch_size: usize,
    pub learning_rate: Scalar,
    pub gamma: Scalar,
    /// Std of the extra exploration noise added on top of policy samples.
    pub sigma_explore: Scalar,
    /// Soft-update coefficient for target networks.
    pub tau: Scalar,
    pub hidden: Vec<usize>,
    /// When false the temperature stays fixed at `exp(init_log_alpha)`.
    pub auto_entropy: bool,
    /// Defaults to minus the action dimension when absent.
    pub target_entropy: Option<Scalar>,
    pub init_log_alpha: Scalar,
    /// Environment steps driven by uniform random actions before learning.
    pub warmup_steps: u64,
    pub total_steps: u64,
    pub eval_every: u64,
    pub eval_episodes: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            n_critics: 2,
            n_quantiles: 25,
            drop_per_critic: 2,
            buffer_capacity: 100_000,
            batch_size: 128,
            learning_rate: 1e-3,
            gamma: 0.95,
            sigma_explore: 0.1,
            tau: 0.05,
            hidden: default_hidden(),
            auto_entropy: true,
            target_entropy: None,
            init_log_alpha: 0.0,
            warmup_steps: 1000,
            total_steps: 200_000,
            eval_every: 5000,
            eval_episodes: 20,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), AgentError> {
        let positive = [
            ("n_critics", self.n_critics),
            ("n_quantiles", self.n_quantiles),
            ("buffer_capacity", self.buffer_capacity),
            ("batch_size", self.batch_size),
            ("eval_episodes", self.eval_episodes),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(AgentError::Config(format!("{name} must be positive")));
            }
        }
        if self.drop_per_critic >= self.n_quantiles {
            return Err(AgentError::Config(
                "drop_per_critic must be smaller than n_quantiles".into(),
            ));
        }
        if self.batch_size > self.buffer_capacity {
            return Err(AgentError::Config("batch_size exceeds buffer_capacity".into()));
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return Err(AgentError::Config("hidden sizes must be positive".into()));
        }
        for (name, v) in [
            ("learning_rate", self.learning_rate),
            ("gamma", self.gamma),
            ("sigma_explore", self.sigma_explore),
            ("tau", self.tau),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(AgentError::Config(format!("{name} must be finite and >= 0")));
            }
        }
        if self.gamma >= 1.0 {
            return Err(AgentError::Config("gamma must be < 1".into()));
        }
        if self.tau > 1.0 {
            return Err(AgentError::Config("tau must be <= 1".into()));
        }
        if self.eval_every == 0 || self.total_steps == 0 {
            return Err(AgentError::Config("step counts must be positive".into()));
        }
        Ok(())
    }
}

/// Sorts each pooled row ascending and drops the `drop_total` largest atoms.
pub fn pool_sort_truncate(sets: &[&Array2<Scalar>], drop_total: usize) -> Array2<Scalar> {
    assert!(!sets.is_empty());
    let views: Vec<_> = sets.iter().map(|a| a.view()).collect();
    let pooled = concatenate(Axis(1), &views).expect("matching batch sizes");
    let (b, n) = pooled.dim();
    assert!(drop_total < n, "cannot drop every atom");
    let keep = n - drop_total;
    let mut out = Array2::zeros((b, keep));
    let mut row: Vec<Scalar> = Vec::with_capacity(n);
    for r in 0..b {
        row.clear();
        row.extend(pooled.row(r).iter().copied());
        row.sort_by(|a, b| a.partial_cmp(b).expect("finite quantiles"));
        for k in 0..keep {
            out[[r, k]] = row[k];
        }
    }
    out
}

/// Bellman-maps kept atoms: `r + gamma * (1 - done) * (z - alpha * logp)`.
pub fn distributional_targets(
    kept: &Array2<Scalar>,
    rewards: &Array1<Scalar>,
    dones: &Array1<Scalar>,
    logp: &Array1<Scalar>,
    alpha: Scalar,
    gamma: Scalar,
) -> Array2<Scalar> {
    let (b, k) = kept.dim();
    assert_eq!(rewards.len(), b);
    let mut out = Array2::zeros((b, k));
    for r in 0..b {
        let scale = gamma * (1.0 - dones[r]);
        for c in 0..k {
            out[[r, c]] = rewards[r] + scale * (kept[[r, c]] - alpha * logp[r]);
        }
    }
    out
}

/// Mean quantile-Huber coupling between predicted quantiles (at midpoint
/// levels) and target atoms; also returns the gradient in the predictions.
pub fn quantile_huber_loss(
    pred: &Array2<Scalar>,
    targets: &Array2<Scalar>,
) -> (Scalar, Array2<Scalar>) {
    let (b, m) = pred.dim();
    let (tb, k) = targets.dim();
    assert_eq!(b, tb);
    let taus: Vec<Scalar> = (0..m).map(|i| (2 * i + 1) as Scalar / (2 * m) as Scalar).collect();
    let mut loss = 0.0;
    let mut dpred = Array2::zeros((b, m));
    for r in 0..b {
        for i in 0..m {
            let q = pred[[r, i]];
            let mut g = 0.0;
            for c in 0..k {
                let delta = targets[[r, c]] - q;
                let (huber, dh) = if delta.abs() <= 1.0 {
                    (0.5 * delta * delta, delta)
                } else {
                    (delta.abs() - 0.5, delta.signum())
                };
                let w = if delta < 0.0 { 1.0 - taus[i] } else { taus[i] };
                loss += w * huber;
                // d delta / d q = -1.
                g -= w * dh;
            }
            dpred[[r, i]] = g;
        }
    }
    let scale = 1.0 / (b * m * k) as Scalar;
    dpred.mapv_inplace(|v| v * scale);
    (loss * scale, dpred)
}

/// `target <- (1 - tau) * target + tau * online`, parameter-wise.
pub fn soft_update(target: &mut Mlp<Scalar>, online: &Mlp<Scalar>, tau: Scalar) {
    assert_eq!(target.layers.len(), online.layers.len());
    for (t, o) in target.layers.iter_mut().zip(&online.layers) {
        t.w.zip_mut_with(&o.w, |tv, &ov| *tv = (1.0 - tau) * *tv + tau * ov);
        t.b.zip_mut_with(&o.b, |tv, &ov| *tv = (1.0 - tau) * *tv + tau * ov);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDiagnostics {
    pub critic_loss: Scalar,
    pub actor_loss: Scalar,
    pub alpha_loss: Scalar,
    pub alpha: Scalar,
    /// Mean log-probability of the actor's fresh samples, an entropy proxy.
    pub mean_logp: Scalar,
}

#[derive(Debug, Clone)]
pub struct TqcLearner {
    pub policy: SquashedGaussianPolicy,
    pub critics: Vec<Mlp<Scalar>>,
    pub targets: Vec<Mlp<Scalar>>,
    pub log_alpha: Scalar,
    pub target_entropy: Scalar,
    pub cfg: TrainConfig,
    pub(crate) opt_policy: Adam<Scalar>,
    pub(crate) opt_critics: Vec<Adam<Scalar>>,
    pub(crate) opt_alpha: ScalarAdam,
    obs_dim: usize,
    act_dim: usize,
}

impl TqcLearner {
    pub fn new<R: Rng>(
        obs_dim: usize,
        act_dim: usize,
        cfg: TrainConfig,
        rng: &mut R,
    ) -> Result<Self, AgentError> {
        cfg.validate()?;
        let policy = SquashedGaussianPolicy::new(obs_dim, act_dim, &cfg.hidden, rng);
        let mut critic_dims = vec![obs_dim + act_dim];
        critic_dims.extend_from_slice(&cfg.hidden);
        critic_dims.push(cfg.n_quantiles);
        let critics: Vec<Mlp<Scalar>> =
            (0..cfg.n_critics).map(|_| Mlp::new(&critic_dims, rng)).collect();
        let targets = critics.clone();
        let opt_policy = policy.optimizer(cfg.learning_rate);
        let opt_critics = critics.iter().map(|c| Adam::new(c, cfg.learning_rate)).collect();
        let opt_alpha = ScalarAdam::new(cfg.learning_rate);
        let target_entropy = cfg.target_entropy.unwrap_or(-(act_dim as Scalar));
        Ok(Self {
            policy,
            critics,
            targets,
            log_alpha: cfg.init_log_alpha,
            target_entropy,
            cfg,
            opt_policy,
            opt_critics,
            opt_alpha,
            obs_dim,
            act_dim,
        })
    }

    pub fn obs_dim(&self) -> usize {
        self.obs_dim
    }

    pub fn act_dim(&self) -> usize {
        self.act_dim
    }

    pub fn alpha(&self) -> Scalar {
        self.log_alpha.exp()
    }

    pub fn deterministic_action(&self, obs: &[Scalar]) -> Vec<Scalar> {
        self.policy.mean_action(obs)
    }

    pub fn explore_action<R: Rng>(&self, obs: &[Scalar], rng: &mut R) -> Vec<Scalar> {
        self.policy.explore(obs, self.cfg.sigma_explore, rng)
    }

    fn concat_obs_act(obs: &Array2<Scalar>, act: &Array2<Scalar>) -> Array2<Scalar> {
        let (b, no) = obs.dim();
        let na = act.ncols();
        assert_eq!(act.nrows(), b);
        let mut out = Array2::zeros((b, no + na));
        out.slice_mut(ndarray::s![.., ..no]).assign(obs);
        out.slice_mut(ndarray::s![.., no..]).assign(act);
        out
    }

    /// Target atom matrix for a batch, using caller-provided next-action
    /// noise so tests can pin the draw.
    pub fn compute_targets(&self, batch: &Batch, noise: &Array2<Scalar>) -> Array2<Scalar> {
        let s = self.policy.sample_batch(&batch.next_obs, noise);
        let x = Self::concat_obs_act(&batch.next_obs, &s.actions);
        let quantiles: Vec<Array2<Scalar>> =
            self.targets.iter().map(|t| t.forward(&x)).collect();
        let refs: Vec<&Array2<Scalar>> = quantiles.iter().collect();
        let kept = pool_sort_truncate(&refs, self.cfg.n_critics * self.cfg.drop_per_critic);
        distributional_targets(
            &kept,
            &batch.rewards,
            &batch.dones,
            &s.log_probs,
            self.alpha(),
            self.cfg.gamma,
        )
    }

    /// Actor objective `mean(alpha * logp - truncated_mean_q)` plus its
    /// gradients in the policy parameters, critics held fixed.
    pub fn actor_loss_and_grads(
        &self,
        obs: &Array2<Scalar>,
        noise: &Array2<Scalar>,
    ) -> (Scalar, MlpGrads<Scalar>, Scalar) {
        let b = obs.nrows();
        let alpha = self.alpha();
        let s = self.policy.sample_batch(obs, noise);
        let x = Self::concat_obs_act(obs, &s.actions);
        let outputs: Vec<(Array2<Scalar>, super::nn::MlpCache<Scalar>)> =
            self.critics.iter().map(|c| c.forward_cached(&x)).collect();

        // Per row: pool all online atoms, keep the smallest `keep`, record
        // which (critic, column) entries were kept for the backward pass.
        let n_total = self.cfg.n_critics * self.cfg.n_quantiles;
        let drop_total = self.cfg.n_critics * self.cfg.drop_per_critic;
        let keep = n_total - drop_total;
        let mut value_mean = 0.0;
        let mut dq: Vec<Array2<Scalar>> =
            self.critics.iter().map(|_| Array2::zeros((b, self.cfg.n_quantiles))).collect();
        let mut entries: Vec<(Scalar, usize, usize)> = Vec::with_capacity(n_total);
        for r in 0..b {
            entries.clear();
            for (ci, (q, _)) in outputs.iter().enumerate() {
                for col in 0..self.cfg.n_quantiles {
                    entries.push((q[[r, col]], ci, col));
                }
            }
            entries.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite quantiles"));
            let mut v = 0.0;
            for &(val, ci, col) in entries.iter().take(keep) {
                v += val;
                // d(actor_loss)/dq = -1/(B*keep) for kept atoms.
                dq[ci][[r, col]] = -1.0 / (b * keep) as Scalar;
            }
            value_mean += v / keep as Scalar;
        }
        value_mean /= b as Scalar;

        let mean_logp = s.log_probs.mean().unwrap();
        let loss = alpha * mean_logp - value_mean;

        // Critic path gradient in the actions.
        let mut g_action = Array2::zeros((b, self.act_dim));
        for (ci, (_, cache)) in outputs.iter().enumerate() {
            let (_, dx) = self.critics[ci].backward(cache, &dq[ci]);
            g_action += &dx.slice(ndarray::s![.., self.obs_dim..]);
        }
        let w_logp = Array1::from_elem(b, alpha / b as Scalar);
        let grads = self.policy.backward_sample(&s, &w_logp, &g_action);
        (loss, grads, mean_logp)
    }

    /// Quantile loss of one critic against fixed targets, with gradients.
    pub fn critic_loss_and_grads(
        &self,
        idx: usize,
        obs: &Array2<Scalar>,
        actions: &Array2<Scalar>,
        y: &Array2<Scalar>,
    ) -> (Scalar, MlpGrads<Scalar>) {
        let x = Self::concat_obs_act(obs, actions);
        let (q, cache) = self.critics[idx].forward_cached(&x);
        let (loss, dq) = quantile_huber_loss(&q, y);
        let (grads, _) = self.critics[idx].backward(&cache, &dq);
        (loss, grads)
    }

    /// One full gradient update: critics, actor, temperature, soft targets.
    pub fn train_step<R: Rng>(
        &mut self,
        batch: &Batch,
        rng: &mut R,
    ) -> Result<StepDiagnostics, AgentError> {
        let b = batch.len();
        let noise_next =
            Array2::from_shape_fn((b, self.act_dim), |_| rng.sample::<Scalar, _>(StandardNormal));
        let y = self.compute_targets(batch, &noise_next);

        let mut critic_loss = 0.0;
        for i in 0..self.critics.len() {
            let (loss, grads) = self.critic_loss_and_grads(i, &batch.obs, &batch.actions, &y);
            if !loss.is_finite() {
                return Err(AgentError::NonFinite(format!("critic {i} loss {loss}")));
            }
            self.opt_critics[i].step(&mut self.critics[i], &grads);
            critic_loss += loss;
        }
        critic_loss /= self.critics.len() as Scalar;

        let noise =
            Array2::from_shape_fn((b, self.act_dim), |_| rng.sample::<Scalar, _>(StandardNormal));
        let (actor_loss, grads, mean_logp) = self.actor_loss_and_grads(&batch.obs, &noise);
        if !actor_loss.is_finite() {
            return Err(AgentError::NonFinite(format!("actor loss {actor_loss}")));
        }
        self.opt_policy.step(&mut self.policy.net, &grads);

        let mut alpha_loss = 0.0;
        if self.cfg.auto_entropy {
            // d/d(log_alpha) of -log_alpha * (logp + H_target).
            let g = -(mean_logp + self.target_entropy);
            alpha_loss = -self.log_alpha * (mean_logp + self.target_entropy);
            self.opt_alpha.step(&mut self.log_alpha, g);
        }

        for (t, o) in self.targets.iter_mut().zip(&self.critics) {
            soft_update(t, o, self.cfg.tau);
        }

        Ok(StepDiagnostics {
            critic_loss,
            actor_loss,
            alpha_loss,
            alpha: self.alpha(),
            mean_logp,
        })
    }
}
