//! Fixed-capacity experience store with uniform minibatch sampling.

use ndarray::{Array1, Array2};
use rand::Rng;

use crate::env::{Observation, OBS_LEN};
use crate::Scalar;

pub const ACT_DIM: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub obs: Observation,
    pub action: [Scalar; ACT_DIM],
    pub reward: Scalar,
    pub next_obs: Observation,
    /// True only for genuine terminal transitions; step-limit truncation
    /// keeps bootstrapping through the successor state.
    pub done: bool,
}

/// Batch in the array layout the learner consumes.
pub struct Batch {
    pub obs: Array2<Scalar>,
    pub actions: Array2<Scalar>,
    pub rewards: Array1<Scalar>,
    pub next_obs: Array2<Scalar>,
    /// 1.0 for terminal, 0.0 otherwise.
    pub dones: Array1<Scalar>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    data: Vec<Transition>,
    capacity: usize,
    head: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0);
        Self { data: Vec::with_capacity(capacity.min(1 << 20)), capacity, head: 0 }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Appends, overwriting the oldest entry once full.
    pub fn push(&mut self, t: Transition) {
        if self.data.len() < self.capacity {
            self.data.push(t);
        } else {
            self.data[self.head] = t;
        }
        self.head = (self.head + 1) % self.capacity;
    }

    /// Uniform sample of `batch` distinct stored transitions.
    pub fn sample<R: Rng>(&self, batch: usize, rng: &mut R) -> Batch {
        assert!(batch <= self.data.len(), "batch larger than stored data");
        let idx = rand::seq::index::sample(rng, self.data.len(), batch);
        let mut obs = Array2::zeros((batch, OBS_LEN));
        let mut actions = Array2::zeros((batch, ACT_DIM));
        let mut rewards = Array1::zeros(batch);
        let mut next_obs = Array2::zeros((batch, OBS_LEN));
        let mut dones = Array1::zeros(batch);
        for (row, i) in idx.into_iter().enumerate() {
            let t = &self.data[i];
            for c in 0..OBS_LEN {
                obs[[row, c]] = t.obs[c];
                next_obs[[row, c]] = t.next_obs[c];
            }
            for c in 0..ACT_DIM {
                actions[[row, c]] = t.action[c];
            }
            rewards[row] = t.reward;
            dones[row] = if t.done { 1.0 } else { 0.0 };
        }
        Batch { obs, actions, rewards, next_obs, dones }
    }
}
