//! Twin-critic, delayed-update deterministic actor-critic producing
//! continuous actions in `[-1, 1]^I`.
//!
//! Per training call:
//!
//! 1. target action `ã = clip(π'(s') + clip(ε, ±c), -1, 1)` with `ε ~ N(0, σ)`;
//! 2. target value `y = r + γ · min(Q₁'(s', ã), Q₂'(s', ã))`;
//! 3. both critics regress to `y` under mean squared error;
//! 4. every `policy_delay`-th call the actor ascends `Q₁(s, π(s))` and all
//!    three target networks blend toward their online counterparts.
//!
//! The task is treated as continuing: every transition bootstraps.

use ndarray::{s, Array2, Axis};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_dim, Error, Result};
use crate::numerics::{soft_update, Activation, Adam, AdamConfig, AdamSnapshot, InitRule, Mlp, MlpSnapshot};
use crate::replay::Transition;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Td3Config {
    pub critic_lr: f64,
    pub actor_lr: f64,
    /// Standard deviation of the exploration noise.
    pub noise_sigma: f64,
    /// Standard deviation of the target-smoothing noise.
    pub target_noise_sigma: f64,
    pub target_noise_clip: f64,
    pub gamma: f64,
    pub tau: f64,
    pub policy_delay: u64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    pub actor_hidden: Vec<usize>,
    pub critic_hidden: Vec<usize>,
}

impl Default for Td3Config {
    fn default() -> Self {
        Self {
            critic_lr: 1e-4,
            actor_lr: 2e-4,
            noise_sigma: 0.1,
            target_noise_sigma: 0.1,
            target_noise_clip: 0.5,
            gamma: 0.1,
            tau: 0.005,
            policy_delay: 2,
            batch_size: 64,
            buffer_capacity: 100_000,
            actor_hidden: vec![256, 256, 256],
            critic_hidden: vec![256, 256],
        }
    }
}

impl Td3Config {
    pub fn validate(&self) -> Result<()> {
        let problems = [
            (self.critic_lr > 0.0, "critic_lr must be positive"),
            (self.actor_lr > 0.0, "actor_lr must be positive"),
            (self.noise_sigma >= 0.0, "noise_sigma must be non-negative"),
            (self.target_noise_sigma >= 0.0, "target_noise_sigma must be non-negative"),
            (self.target_noise_clip >= 0.0, "target_noise_clip must be non-negative"),
            ((0.0..1.0).contains(&self.gamma), "gamma must lie in [0, 1)"),
            (self.tau > 0.0 && self.tau <= 1.0, "tau must lie in (0, 1]"),
            (self.policy_delay >= 1, "policy_delay must be at least 1"),
            (self.batch_size >= 1, "batch_size must be at least 1"),
            (self.buffer_capacity >= self.batch_size, "buffer must hold a batch"),
        ];
        match problems.iter().find(|(ok, _)| !ok) {
            Some((_, msg)) => Err(Error::Config(format!("td3: {msg}"))),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActionMode {
    /// Uniform random action.
    Explore,
    /// Actor output plus Gaussian noise, clipped.
    Train,
    /// Noiseless actor output.
    Eval,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Td3Losses {
    /// Mean of the two critics' squared-error losses.
    pub critic_loss: f64,
    /// Present on delayed (actor-updating) calls.
    pub actor_loss: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Td3Agent {
    config: Td3Config,
    state_dim: usize,
    action_dim: usize,
    actor: Mlp,
    critics: [Mlp; 2],
    actor_target: Mlp,
    critic_targets: [Mlp; 2],
    actor_opt: Adam,
    critic_opts: [Adam; 2],
    train_calls: u64,
}

fn sizes(input: usize, hidden: &[usize], output: usize) -> Vec<usize> {
    let mut v = Vec::with_capacity(hidden.len() + 2);
    v.push(input);
    v.extend_from_slice(hidden);
    v.push(output);
    v
}

impl Td3Agent {
    pub fn new<R: Rng + ?Sized>(
        state_dim: usize,
        action_dim: usize,
        config: Td3Config,
        rng: &mut R,
    ) -> Result<Self> {
        config.validate()?;
        let actor = Mlp::new(
            &sizes(state_dim, &config.actor_hidden, action_dim),
            Activation::Relu,
            Activation::Tanh,
            InitRule::FanInUniform,
            rng,
        )?;
        let critic_sizes = sizes(state_dim + action_dim, &config.critic_hidden, 1);
        let mut critic = || {
            Mlp::new(&critic_sizes, Activation::Relu, Activation::Linear, InitRule::FanInUniform, rng)
        };
        let critics = [critic()?, critic()?];
        Self::assemble(config, actor, critics)
    }

    /// Builds an agent around explicit networks; targets start as copies.
    pub fn from_networks(config: Td3Config, actor: Mlp, critics: [Mlp; 2]) -> Result<Self> {
        config.validate()?;
        Self::assemble(config, actor, critics)
    }

    fn assemble(config: Td3Config, actor: Mlp, critics: [Mlp; 2]) -> Result<Self> {
        let state_dim = actor.input_size();
        let action_dim = actor.output_size();
        for c in &critics {
            ensure_dim("critic input", state_dim + action_dim, c.input_size())?;
            ensure_dim("critic output", 1, c.output_size())?;
        }
        if !critics[0].same_architecture(&critics[1]) {
            return Err(Error::Architecture("twin critics differ".into()));
        }
        let actor_opt = Adam::new(&actor, AdamConfig::with_learning_rate(config.actor_lr))?;
        let copt = AdamConfig::with_learning_rate(config.critic_lr);
        let critic_opts = [Adam::new(&critics[0], copt)?, Adam::new(&critics[1], copt)?];
        Ok(Self {
            actor_target: actor.clone(),
            critic_targets: critics.clone(),
            actor,
            critics,
            actor_opt,
            critic_opts,
            config,
            state_dim,
            action_dim,
            train_calls: 0,
        })
    }

    pub fn config(&self) -> &Td3Config {
        &self.config
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn action_dim(&self) -> usize {
        self.action_dim
    }

    pub fn actor(&self) -> &Mlp {
        &self.actor
    }

    pub fn critics(&self) -> &[Mlp; 2] {
        &self.critics
    }

    pub fn actor_target(&self) -> &Mlp {
        &self.actor_target
    }

    pub fn critic_targets(&self) -> &[Mlp; 2] {
        &self.critic_targets
    }

    pub fn train_calls(&self) -> u64 {
        self.train_calls
    }

    pub fn select_action<R: Rng + ?Sized>(
        &self,
        state: &[f64],
        mode: ActionMode,
        rng: &mut R,
    ) -> Result<Vec<f64>> {
        ensure_dim("td3 state", self.state_dim, state.len())?;
        match mode {
            ActionMode::Explore => Ok((0..self.action_dim).map(|_| rng.random_range(-1.0..=1.0)).collect()),
            ActionMode::Eval => self.actor.predict(state),
            ActionMode::Train => {
                let mut a = self.actor.predict(state)?;
                if self.config.noise_sigma > 0.0 {
                    let noise = Normal::new(0.0, self.config.noise_sigma)
                        .map_err(|e| Error::Config(e.to_string()))?;
                    for v in &mut a {
                        *v = (*v + noise.sample(rng)).clamp(-1.0, 1.0);
                    }
                }
                Ok(a)
            }
        }
    }

    fn batch_matrices(&self, batch: &[&Transition<Vec<f64>>]) -> Result<(Array2<f64>, Array2<f64>, Vec<f64>, Array2<f64>)> {
        let n = batch.len();
        let mut states = Array2::zeros((n, self.state_dim));
        let mut actions = Array2::zeros((n, self.action_dim));
        let mut next = Array2::zeros((n, self.state_dim));
        let mut rewards = Vec::with_capacity(n);
        for (i, t) in batch.iter().enumerate() {
            ensure_dim("td3 transition state", self.state_dim, t.state.len())?;
            ensure_dim("td3 transition next state", self.state_dim, t.next_state.len())?;
            ensure_dim("td3 transition action", self.action_dim, t.action.len())?;
            states.row_mut(i).assign(&ndarray::ArrayView1::from(&t.state[..]));
            next.row_mut(i).assign(&ndarray::ArrayView1::from(&t.next_state[..]));
            actions.row_mut(i).assign(&ndarray::ArrayView1::from(&t.action[..]));
            rewards.push(t.reward);
        }
        Ok((states, actions, rewards, next))
    }

    fn concat(states: &Array2<f64>, actions: &Array2<f64>) -> Array2<f64> {
        ndarray::concatenate(Axis(1), &[states.view(), actions.view()]).expect("equal row counts")
    }

    /// Smoothed target actions `clip(π'(s') + clip(ε), -1, 1)`.
    fn target_actions<R: Rng + ?Sized>(&self, next: &Array2<f64>, rng: &mut R) -> Result<Array2<f64>> {
        let mut a = self.actor_target.predict_batch(next.view())?;
        if self.config.target_noise_sigma > 0.0 {
            let noise = Normal::new(0.0, self.config.target_noise_sigma)
                .map_err(|e| Error::Config(e.to_string()))?;
            let c = self.config.target_noise_clip;
            a.mapv_inplace(|v| (v + noise.sample(rng).clamp(-c, c)).clamp(-1.0, 1.0));
        }
        Ok(a)
    }

    /// Bootstrapped regression targets for a batch, without updating anything.
    pub fn compute_targets<R: Rng + ?Sized>(
        &self,
        batch: &[&Transition<Vec<f64>>],
        rng: &mut R,
    ) -> Result<Vec<f64>> {
        let (_, _, rewards, next) = self.batch_matrices(batch)?;
        self.targets_from(&rewards, &next, rng)
    }

    fn targets_from<R: Rng + ?Sized>(&self, rewards: &[f64], next: &Array2<f64>, rng: &mut R) -> Result<Vec<f64>> {
        let a = self.target_actions(next, rng)?;
        let sa = Self::concat(next, &a);
        let q1 = self.critic_targets[0].predict_batch(sa.view())?;
        let q2 = self.critic_targets[1].predict_batch(sa.view())?;
        Ok(rewards
            .iter()
            .enumerate()
            .map(|(i, r)| r + self.config.gamma * q1[[i, 0]].min(q2[[i, 0]]))
            .collect())
    }

    pub fn train_step<R: Rng + ?Sized>(
        &mut self,
        batch: &[&Transition<Vec<f64>>],
        rng: &mut R,
    ) -> Result<Td3Losses> {
        if batch.is_empty() {
            return Err(Error::InvalidArgument("empty training batch".into()));
        }
        let (states, actions, rewards, next) = self.batch_matrices(batch)?;
        let y = self.targets_from(&rewards, &next, rng)?;
        let n = batch.len() as f64;
        let sa = Self::concat(&states, &actions);

        let mut critic_loss = 0.0;
        for (critic, opt) in self.critics.iter_mut().zip(self.critic_opts.iter_mut()) {
            let cache = critic.forward_batch(sa.view())?;
            let q = cache.outputs();
            let mut grad = Array2::zeros((batch.len(), 1));
            let mut loss = 0.0;
            for i in 0..batch.len() {
                let diff = q[[i, 0]] - y[i];
                loss += diff * diff;
                grad[[i, 0]] = 2.0 * diff / n;
            }
            loss /= n;
            if !loss.is_finite() {
                return Err(Error::NonFinite(format!(
                    "critic loss at training call {} (targets {:?}..)",
                    self.train_calls + 1,
                    &y[..y.len().min(4)]
                )));
            }
            let g = critic.backward(&cache, grad.view())?;
            opt.step(critic, &g)?;
            critic_loss += loss / 2.0;
        }

        self.train_calls += 1;
        let mut actor_loss = None;
        if self.train_calls % self.config.policy_delay == 0 {
            let actor_cache = self.actor.forward_batch(states.view())?;
            let pi = actor_cache.outputs().clone();
            let sa_pi = Self::concat(&states, &pi);
            let q_cache = self.critics[0].forward_batch(sa_pi.view())?;
            let loss = -q_cache.outputs().mean().expect("non-empty batch");
            if !loss.is_finite() {
                return Err(Error::NonFinite(format!(
                    "actor loss at training call {}",
                    self.train_calls
                )));
            }
            let dq = Array2::from_elem((batch.len(), 1), -1.0 / n);
            let q_grads = self.critics[0].backward(&q_cache, dq.view())?;
            let d_action = q_grads.input.slice(s![.., self.state_dim..]).to_owned();
            let actor_grads = self.actor.backward(&actor_cache, d_action.view())?;
            self.actor_opt.step(&mut self.actor, &actor_grads)?;

            let tau = self.config.tau;
            soft_update(&mut self.actor_target, &self.actor, tau)?;
            soft_update(&mut self.critic_targets[0], &self.critics[0], tau)?;
            soft_update(&mut self.critic_targets[1], &self.critics[1], tau)?;
            actor_loss = Some(loss);
        }
        Ok(Td3Losses {
            critic_loss,
            actor_loss,
        })
    }

    pub fn checkpoint(&self) -> Td3Checkpoint {
        Td3Checkpoint {
            config: self.config.clone(),
            train_calls: self.train_calls,
            actor: self.actor.snapshot(),
            critic1: self.critics[0].snapshot(),
            critic2: self.critics[1].snapshot(),
            actor_target: self.actor_target.snapshot(),
            critic1_target: self.critic_targets[0].snapshot(),
            critic2_target: self.critic_targets[1].snapshot(),
            actor_optimizer: self.actor_opt.snapshot(),
            critic1_optimizer: self.critic_opts[0].snapshot(),
            critic2_optimizer: self.critic_opts[1].snapshot(),
        }
    }

    pub fn restore(cp: &Td3Checkpoint) -> Result<Self> {
        let actor = Mlp::from_snapshot(&cp.actor)?;
        let critics = [Mlp::from_snapshot(&cp.critic1)?, Mlp::from_snapshot(&cp.critic2)?];
        let mut agent = Self::from_networks(cp.config.clone(), actor, critics)?;
        agent.actor_target = Mlp::from_snapshot(&cp.actor_target)?;
        agent.critic_targets = [
            Mlp::from_snapshot(&cp.critic1_target)?,
            Mlp::from_snapshot(&cp.critic2_target)?,
        ];
        if !agent.actor_target.same_architecture(&agent.actor)
            || !agent.critic_targets[0].same_architecture(&agent.critics[0])
            || !agent.critic_targets[1].same_architecture(&agent.critics[1])
        {
            return Err(Error::Architecture("checkpoint targets differ from online networks".into()));
        }
        agent.actor_opt = Adam::from_snapshot(&cp.actor_optimizer, &agent.actor)?;
        agent.critic_opts = [
            Adam::from_snapshot(&cp.critic1_optimizer, &agent.critics[0])?,
            Adam::from_snapshot(&cp.critic2_optimizer, &agent.critics[1])?,
        ];
        agent.train_calls = cp.train_calls;
        Ok(agent)
    }
}

/// Serialized agent state; networks use the numerics snapshot layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Td3Checkpoint {
    pub config: Td3Config,
    pub train_calls: u64,
    pub actor: MlpSnapshot,
    pub critic1: MlpSnapshot,
    pub critic2: MlpSnapshot,
    pub actor_target: MlpSnapshot,
    pub critic1_target: MlpSnapshot,
    pub critic2_target: MlpSnapshot,
    pub actor_optimizer: AdamSnapshot,
    pub critic1_optimizer: AdamSnapshot,
    pub critic2_optimizer: AdamSnapshot,
}
