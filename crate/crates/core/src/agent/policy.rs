//! Squashed Gaussian policy head.
//!
//! The trunk emits per-dimension mean and log-std; actions are
//! `tanh(mean + std * xi)` with `xi ~ N(0,1)`, so every emitted action lands
//! in [-1, 1]. Log-probabilities carry the squashing correction. The backward
//! path takes the noise as an explicit input, which makes the analytic
//! gradients directly comparable against finite differences.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::StandardNormal;

use super::nn::{Adam, Mlp, MlpGrads};
use crate::Scalar;

pub const LOG_STD_MIN: Scalar = -20.0;
pub const LOG_STD_MAX: Scalar = 2.0;
/// Keeps the squash correction finite when an action saturates.
const SQUASH_EPS: Scalar = 1e-6;
const LN_SQRT_2PI: Scalar = 0.918_938_533_204_672_8;

/// Everything one reparameterized batch sample produces, kept around so the
/// actor update can push gradients back through the same draw.
pub struct PolicySample {
    pub actions: Array2<Scalar>,
    pub log_probs: Array1<Scalar>,
    pub mu: Array2<Scalar>,
    pub log_std: Array2<Scalar>,
    /// 1 where the raw log-std was inside the clamp window, else 0.
    clamp_gate: Array2<Scalar>,
    pub noise: Array2<Scalar>,
    cache: super::nn::MlpCache<Scalar>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SquashedGaussianPolicy {
    pub net: Mlp<Scalar>,
    pub act_dim: usize,
}

impl SquashedGaussianPolicy {
    pub fn new<R: Rng>(obs_dim: usize, act_dim: usize, hidden: &[usize], rng: &mut R) -> Self {
        let mut dims = vec![obs_dim];
        dims.extend_from_slice(hidden);
        dims.push(2 * act_dim);
        Self { net: Mlp::new(&dims, rng), act_dim }
    }

    pub fn obs_dim(&self) -> usize {
        self.net.in_dim()
    }

    pub fn optimizer(&self, lr: Scalar) -> Adam<Scalar> {
        Adam::new(&self.net, lr)
    }

    /// Squashed mean, the deterministic evaluation action.
    pub fn mean_action(&self, obs: &[Scalar]) -> Vec<Scalar> {
        let x = Array2::from_shape_vec((1, obs.len()), obs.to_vec()).unwrap();
        let out = self.net.forward(&x);
        (0..self.act_dim).map(|d| out[[0, d]].tanh()).collect()
    }

    /// Reparameterized sample for a whole batch with caller-provided noise.
    pub fn sample_batch(&self, obs: &Array2<Scalar>, noise: &Array2<Scalar>) -> PolicySample {
        let b = obs.nrows();
        assert_eq!(noise.dim(), (b, self.act_dim));
        let (out, cache) = self.net.forward_cached(obs);
        let mu = out.slice(ndarray::s![.., ..self.act_dim]).to_owned();
        let raw_ls = out.slice(ndarray::s![.., self.act_dim..]).to_owned();
        let clamp_gate = raw_ls.mapv(|v| {
            if (LOG_STD_MIN..LOG_STD_MAX).contains(&v) {
                1.0
            } else {
                0.0
            }
        });
        let log_std = raw_ls.mapv(|v| v.clamp(LOG_STD_MIN, LOG_STD_MAX));
        let std = log_std.mapv(Scalar::exp);
        let u = &mu + &(&std * noise);
        let actions = u.mapv(Scalar::tanh);
        let mut log_probs = Array1::zeros(b);
        for r in 0..b {
            let mut lp = 0.0;
            for d in 0..self.act_dim {
                let xi = noise[[r, d]];
                let a = actions[[r, d]];
                lp += -0.5 * xi * xi - LN_SQRT_2PI - log_std[[r, d]]
                    - (1.0 - a * a + SQUASH_EPS).ln();
            }
            log_probs[r] = lp;
        }
        PolicySample { actions, log_probs, mu, log_std, clamp_gate, noise: noise.clone(), cache }
    }

    /// Single-observation stochastic sample.
    pub fn sample<R: Rng>(&self, obs: &[Scalar], rng: &mut R) -> (Vec<Scalar>, Scalar) {
        let x = Array2::from_shape_vec((1, obs.len()), obs.to_vec()).unwrap();
        let noise =
            Array2::from_shape_fn((1, self.act_dim), |_| rng.sample::<Scalar, _>(StandardNormal));
        let s = self.sample_batch(&x, &noise);
        (s.actions.row(0).to_vec(), s.log_probs[0])
    }

    /// Stochastic sample plus independent exploration noise, clamped.
    pub fn explore<R: Rng>(&self, obs: &[Scalar], sigma: Scalar, rng: &mut R) -> Vec<Scalar> {
        let (mut a, _) = self.sample(obs, rng);
        for v in &mut a {
            let n: Scalar = rng.sample(StandardNormal);
            *v = (*v + sigma * n).clamp(-1.0, 1.0);
        }
        a
    }

    /// Density of the squashed distribution at an arbitrary action.
    pub fn log_prob_of(&self, obs: &[Scalar], action: &[Scalar]) -> Scalar {
        let x = Array2::from_shape_vec((1, obs.len()), obs.to_vec()).unwrap();
        let out = self.net.forward(&x);
        let mut lp = 0.0;
        for d in 0..self.act_dim {
            let mu = out[[0, d]];
            let ls = out[[0, self.act_dim + d]].clamp(LOG_STD_MIN, LOG_STD_MAX);
            let a = action[d].clamp(-1.0 + 1e-12, 1.0 - 1e-12);
            let u = a.atanh();
            let xi = (u - mu) / ls.exp();
            lp += -0.5 * xi * xi - LN_SQRT_2PI - ls - (1.0 - a * a + SQUASH_EPS).ln();
        }
        lp
    }

    /// Backpropagates a loss of the form
    /// `sum_rows( w_logp[r] * log_prob[r] ) + sum( g_action .* actions )`
    /// through the sample into parameter gradients. The two weight inputs let
    /// the actor update combine the entropy term and the critic value path in
    /// one pass.
    pub fn backward_sample(
        &self,
        s: &PolicySample,
        w_logp: &Array1<Scalar>,
        g_action: &Array2<Scalar>,
    ) -> MlpGrads<Scalar> {
        let b = s.actions.nrows();
        assert_eq!(w_logp.len(), b);
        assert_eq!(g_action.dim(), s.actions.dim());
        let mut dout = Array2::zeros((b, 2 * self.act_dim));
        for r in 0..b {
            let w = w_logp[r];
            for d in 0..self.act_dim {
                let a = s.actions[[r, d]];
                let one_m = 1.0 - a * a;
                let std = s.log_std[[r, d]].exp();
                let xi = s.noise[[r, d]];
                // d log_prob / d u through the squash correction only; the
                // Gaussian quadratic term is constant under reparameterization.
                let dlogp_du = 2.0 * a * one_m / (one_m + SQUASH_EPS);
                let da_du = one_m;
                let du_dmu = 1.0;
                let du_dls = std * xi;
                let g_a = g_action[[r, d]];
                let dmu = w * dlogp_du * du_dmu + g_a * da_du * du_dmu;
                let dls_direct = -w;
                let dls = dls_direct + (w * dlogp_du + g_a * da_du) * du_dls;
                dout[[r, d]] = dmu;
                dout[[r, self.act_dim + d]] = dls * s.clamp_gate[[r, d]];
            }
        }
        let (grads, _) = self.net.backward(&s.cache, &dout);
        grads
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small_policy(seed: u64) -> SquashedGaussianPolicy {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        SquashedGaussianPolicy::new(4, 3, &[8, 8], &mut rng)
    }

    #[test]
    fn mean_action_is_deterministic_and_bounded() {
        let p = small_policy(0);
        let obs = [0.2, 0.8, 0.1, 0.5];
        let a = p.mean_action(&obs);
        assert_eq!(a, p.mean_action(&obs));
        assert!(a.iter().all(|v| (-1.0..=1.0).contains(v)));
    }

    #[test]
    fn samples_stay_in_bounds_for_random_observations() {
        let p = small_policy(1);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10_000 {
            let obs: Vec<Scalar> = (0..4).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let (a, lp) = p.sample(&obs, &mut rng);
            assert!(a.iter().all(|v| (-1.0..=1.0).contains(v)));
            assert!(lp.is_finite());
            let e = p.explore(&obs, 0.1, &mut rng);
            assert!(e.iter().all(|v| (-1.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn zero_sigma_exploration_equals_plain_sampling() {
        let p = small_policy(2);
        let obs = [0.1, -0.4, 0.9, 0.0];
        let mut r1 = ChaCha8Rng::seed_from_u64(5);
        let mut r2 = ChaCha8Rng::seed_from_u64(5);
        let (a, _) = p.sample(&obs, &mut r1);
        let e = p.explore(&obs, 0.0, &mut r2);
        // Same rng stream: the extra zero-scaled draws do not change values.
        assert_eq!(a, e);
    }

    #[test]
    fn exploration_noise_has_the_requested_spread() {
        // Statistical check of the additive component: empirical std of
        // sigma-scaled standard normal draws within 5% of sigma.
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let sigma = 0.1;
        let n = 100_000;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for _ in 0..n {
            let v: Scalar = sigma * rng.sample::<Scalar, _>(StandardNormal);
            sum += v;
            sumsq += v * v;
        }
        let mean = sum / n as Scalar;
        let std = (sumsq / n as Scalar - mean * mean).sqrt();
        assert!((std - sigma).abs() / sigma < 0.05, "std {std}");
    }

    #[test]
    fn density_integrates_to_one_on_a_toy_net() {
        // One observation, one action dim: integrate exp(log_prob) over the
        // action interval by substitution a = tanh(u).
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = SquashedGaussianPolicy::new(1, 1, &[6], &mut rng);
        let obs = [0.3];
        let out = p.net.forward(&array![[0.3]]);
        let mu = out[[0, 0]];
        let std = out[[0, 1]].clamp(LOG_STD_MIN, LOG_STD_MAX).exp();
        let (lo, hi) = (mu - 9.0 * std, mu + 9.0 * std);
        let n = 40_000;
        let h = (hi - lo) / n as Scalar;
        let mut total = 0.0;
        for i in 0..=n {
            let u = lo + h * i as Scalar;
            let a = u.tanh();
            let jac = 1.0 - a * a;
            let f = p.log_prob_of(&obs, &[a]).exp() * jac;
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            total += w * f * h;
        }
        assert!((total - 1.0).abs() < 1e-3, "integral {total}");
    }

    #[test]
    fn sample_gradients_match_finite_differences() {
        for seed in 0..4 {
            let p0 = small_policy(40 + seed);
            let mut rng = ChaCha8Rng::seed_from_u64(900 + seed);
            let b = 6;
            let obs = Array2::from_shape_fn((b, 4), |_| rng.gen_range(-1.0..1.0));
            let noise = Array2::from_shape_fn((b, 3), |_| rng.gen_range(-1.5..1.5));
            let w_logp = Array1::from_shape_fn(b, |_| rng.gen_range(-0.5..0.5));
            let g_action = Array2::from_shape_fn((b, 3), |_| rng.gen_range(-1.0..1.0));

            let loss = |p: &SquashedGaussianPolicy| -> Scalar {
                let s = p.sample_batch(&obs, &noise);
                let lp_term: Scalar =
                    s.log_probs.iter().zip(w_logp.iter()).map(|(l, w)| l * w).sum();
                let a_term: Scalar =
                    s.actions.iter().zip(g_action.iter()).map(|(a, g)| a * g).sum();
                lp_term + a_term
            };

            let s = p0.sample_batch(&obs, &noise);
            let grads = p0.backward_sample(&s, &w_logp, &g_action);
            let analytic: Vec<Scalar> = grads
                .layers
                .iter()
                .flat_map(|(w, bb)| w.iter().chain(bb.iter()).copied().collect::<Vec<_>>())
                .collect();

            let mut flat = p0.net.flatten();
            let mut p = p0.clone();
            for (i, g) in analytic.iter().enumerate() {
                let h = 1e-6 * flat[i].abs().max(1.0);
                let orig = flat[i];
                flat[i] = orig + h;
                p.net.set_from_flat(&flat);
                let lp = loss(&p);
                flat[i] = orig - h;
                p.net.set_from_flat(&flat);
                let lm = loss(&p);
                flat[i] = orig;
                p.net.set_from_flat(&flat);
                let fd = (lp - lm) / (2.0 * h);
                let denom = fd.abs().max(g.abs()).max(1e-4);
                assert!(
                    ((fd - g) / denom).abs() < 1e-4,
                    "seed {seed} param {i}: fd {fd} vs analytic {g}"
                );
            }
        }
    }

    #[test]
    fn log_prob_of_matches_sampled_log_prob() {
        let p = small_policy(6);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..200 {
            let obs: Vec<Scalar> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let (a, lp) = p.sample(&obs, &mut rng);
            let lp2 = p.log_prob_of(&obs, &a);
            // atanh(tanh(u)) loses a little precision far in the tails.
            assert!((lp - lp2).abs() < 1e-6, "{lp} vs {lp2}");
        }
    }
}
