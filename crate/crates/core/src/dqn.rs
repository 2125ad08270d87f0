//! Centralised Q-network over a discrete joint action space with cost
//! semantics: rewards are latencies and the greedy policy picks the
//! *minimum* Q-value.
//!
//! Training targets are `y = r + γ · min_{A ∈ 𝒜(s')} Q'(s', A)` where
//! `𝒜(s')` is the set of actions valid in the next state; the target network
//! only changes through [`DqnAgent::sync_target`].

use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_dim, Error, Result};
use crate::numerics::{Activation, Adam, AdamConfig, AdamSnapshot, InitRule, Mlp, MlpSnapshot};
use crate::replay::{ActionShape, ReplayAction, Transition};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DqnConfig {
    pub learning_rate: f64,
    pub gamma: f64,
    pub epsilon: f64,
    /// Hard target copy every this many slots.
    pub target_sync_period: u64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    pub hidden: Vec<usize>,
}

impl Default for DqnConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            gamma: 0.99,
            epsilon: 0.1,
            target_sync_period: 100,
            batch_size: 64,
            buffer_capacity: 10_000,
            hidden: vec![256, 256],
        }
    }
}

impl DqnConfig {
    pub fn validate(&self) -> Result<()> {
        let checks = [
            (self.learning_rate > 0.0, "learning_rate must be positive"),
            ((0.0..1.0).contains(&self.gamma), "gamma must lie in [0, 1)"),
            ((0.0..=1.0).contains(&self.epsilon), "epsilon must lie in [0, 1]"),
            (self.target_sync_period >= 1, "target_sync_period must be at least 1"),
            (self.batch_size >= 1, "batch_size must be at least 1"),
            (self.buffer_capacity >= self.batch_size, "buffer must hold a batch"),
        ];
        match checks.iter().find(|(ok, _)| !ok) {
            Some((_, msg)) => Err(Error::Config(format!("dqn: {msg}"))),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    /// Uniform over valid actions.
    Explore,
    /// ε-greedy.
    Train,
    /// Pure argmin.
    Eval,
}

/// Action taken plus the valid action set of the following state, which the
/// bootstrapped target minimises over.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedAction {
    pub index: usize,
    pub next_valid: Vec<usize>,
}

impl ReplayAction for MaskedAction {
    fn check(&self, shape: &ActionShape) -> Option<String> {
        match *shape {
            ActionShape::Discrete(n) => {
                if self.index >= n {
                    Some(format!("action {} outside 0..{n}", self.index))
                } else if self.next_valid.is_empty() || self.next_valid.iter().any(|&a| a >= n) {
                    Some(format!("next valid set {:?} not within 0..{n}", self.next_valid))
                } else {
                    None
                }
            }
            other => Some(format!("discrete action against {other:?}")),
        }
    }
}

/// Index of the smallest value among `valid`; ties go to the lowest index.
pub fn argmin_over(values: &[f64], valid: &[usize]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    let mut sorted: Vec<usize> = valid.to_vec();
    sorted.sort_unstable();
    for a in sorted {
        let v = values[a];
        match best {
            Some((_, bv)) if v >= bv => {}
            _ => best = Some((a, v)),
        }
    }
    best.map(|(a, _)| a)
}

#[derive(Debug, Clone)]
pub struct DqnAgent {
    config: DqnConfig,
    q: Mlp,
    target: Mlp,
    opt: Adam,
    train_calls: u64,
}

impl DqnAgent {
    pub fn new<R: Rng + ?Sized>(
        state_dim: usize,
        action_count: usize,
        config: DqnConfig,
        rng: &mut R,
    ) -> Result<Self> {
        if action_count == 0 {
            return Err(Error::InvalidArgument("action set must be non-empty".into()));
        }
        let mut sizes = vec![state_dim];
        sizes.extend_from_slice(&config.hidden);
        sizes.push(action_count);
        let q = Mlp::new(&sizes, Activation::Relu, Activation::Linear, InitRule::FanInUniform, rng)?;
        Self::from_network(config, q)
    }

    pub fn from_network(config: DqnConfig, q: Mlp) -> Result<Self> {
        config.validate()?;
        let opt = Adam::new(&q, AdamConfig::with_learning_rate(config.learning_rate))?;
        Ok(Self {
            target: q.clone(),
            q,
            opt,
            config,
            train_calls: 0,
        })
    }

    pub fn config(&self) -> &DqnConfig {
        &self.config
    }

    pub fn set_epsilon(&mut self, epsilon: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::InvalidArgument(format!("epsilon {epsilon} outside [0, 1]")));
        }
        self.config.epsilon = epsilon;
        Ok(())
    }

    pub fn state_dim(&self) -> usize {
        self.q.input_size()
    }

    pub fn action_count(&self) -> usize {
        self.q.output_size()
    }

    pub fn q_network(&self) -> &Mlp {
        &self.q
    }

    pub fn q_network_mut(&mut self) -> &mut Mlp {
        &mut self.q
    }

    pub fn target_network(&self) -> &Mlp {
        &self.target
    }

    pub fn train_calls(&self) -> u64 {
        self.train_calls
    }

    pub fn q_values(&self, state: &[f64]) -> Result<Vec<f64>> {
        ensure_dim("dqn state", self.state_dim(), state.len())?;
        self.q.predict(state)
    }

    /// Chooses among `valid` action indices.
    pub fn select_action<R: Rng + ?Sized>(
        &self,
        state: &[f64],
        valid: &[usize],
        phase: Phase,
        rng: &mut R,
    ) -> Result<usize> {
        ensure_dim("dqn state", self.state_dim(), state.len())?;
        if valid.is_empty() {
            return Err(Error::InvalidArgument("no valid actions".into()));
        }
        if let Some(&bad) = valid.iter().find(|&&a| a >= self.action_count()) {
            return Err(Error::InvalidAction(format!("index {bad} >= {}", self.action_count())));
        }
        let uniform = |rng: &mut R| valid[rng.random_range(0..valid.len())];
        match phase {
            Phase::Explore => Ok(uniform(rng)),
            Phase::Train => {
                let explore: f64 = rng.random();
                if explore < self.config.epsilon {
                    Ok(uniform(rng))
                } else {
                    self.greedy(state, valid)
                }
            }
            Phase::Eval => self.greedy(state, valid),
        }
    }

    fn greedy(&self, state: &[f64], valid: &[usize]) -> Result<usize> {
        let q = self.q.predict(state)?;
        Ok(argmin_over(&q, valid).expect("non-empty valid set"))
    }

    /// Bootstrapped targets from the target network only.
    pub fn compute_targets(&self, batch: &[&Transition<MaskedAction>]) -> Result<Vec<f64>> {
        let n = batch.len();
        let dim = self.state_dim();
        let mut next = Array2::zeros((n, dim));
        for (i, t) in batch.iter().enumerate() {
            ensure_dim("dqn next state", dim, t.next_state.len())?;
            next.row_mut(i).assign(&ndarray::ArrayView1::from(&t.next_state[..]));
        }
        let q_next = self.target.predict_batch(next.view())?;
        batch
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let row = q_next.row(i);
                let row = row.as_slice().expect("standard layout");
                let best = argmin_over(row, &t.action.next_valid)
                    .ok_or_else(|| Error::InvalidArgument("empty next valid set".into()))?;
                Ok(t.reward + self.config.gamma * row[best])
            })
            .collect()
    }

    /// One optimizer step on the mean squared TD error; returns the loss.
    pub fn train_step(&mut self, batch: &[&Transition<MaskedAction>]) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::InvalidArgument("empty training batch".into()));
        }
        let y = self.compute_targets(batch)?;
        let n = batch.len();
        let dim = self.state_dim();
        let mut states = Array2::zeros((n, dim));
        for (i, t) in batch.iter().enumerate() {
            ensure_dim("dqn state", dim, t.state.len())?;
            if t.action.index >= self.action_count() {
                return Err(Error::InvalidAction(format!("index {}", t.action.index)));
            }
            states.row_mut(i).assign(&ndarray::ArrayView1::from(&t.state[..]));
        }
        let cache = self.q.forward_batch(states.view())?;
        let q = cache.outputs();
        let mut grad = Array2::zeros(q.raw_dim());
        let mut loss = 0.0;
        for (i, t) in batch.iter().enumerate() {
            let diff = q[[i, t.action.index]] - y[i];
            loss += diff * diff;
            grad[[i, t.action.index]] = 2.0 * diff / n as f64;
        }
        loss /= n as f64;
        if !loss.is_finite() {
            return Err(Error::NonFinite(format!(
                "dqn loss at training call {}",
                self.train_calls + 1
            )));
        }
        let g = self.q.backward(&cache, grad.view())?;
        self.opt.step(&mut self.q, &g)?;
        self.train_calls += 1;
        Ok(loss)
    }

    /// Hard copy `θ' ← θ`.
    pub fn sync_target(&mut self) {
        self.target.clone_from(&self.q);
    }

    pub fn checkpoint(&self) -> DqnCheckpoint {
        DqnCheckpoint {
            config: self.config.clone(),
            train_calls: self.train_calls,
            q: self.q.snapshot(),
            target: self.target.snapshot(),
            optimizer: self.opt.snapshot(),
        }
    }

    pub fn restore(cp: &DqnCheckpoint) -> Result<Self> {
        let q = Mlp::from_snapshot(&cp.q)?;
        let target = Mlp::from_snapshot(&cp.target)?;
        if !target.same_architecture(&q) {
            return Err(Error::Architecture("target differs from Q network".into()));
        }
        let mut agent = Self::from_network(cp.config.clone(), q)?;
        agent.target = target;
        agent.opt = Adam::from_snapshot(&cp.optimizer, &agent.q)?;
        agent.train_calls = cp.train_calls;
        Ok(agent)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DqnCheckpoint {
    pub config: DqnConfig,
    pub train_calls: u64,
    pub q: MlpSnapshot,
    pub target: MlpSnapshot,
    pub optimizer: AdamSnapshot,
}
