use std::path::{Path, PathBuf};

use super::config::{ExperimentConfig, Policy, Scenario};
use super::metrics::{write_metrics, MecRecord, MetricsRecord, SlicingRecord};
use crate::dqn::{DqnAgent, MaskedAction, Phase};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::mec::{rra, Choice, MecEnv, MecStep};
use crate::replay::{ActionShape, ReplayBuffer, Transition};
use crate::seeding::{stream_rng, Stream};
use crate::slicing::{map_action, sra, utility, water_fill_optimal, SliceMode, SliceStep, SlicingEnv};
use crate::td3::{ActionMode, Td3Agent};

/// Everything a finished run leaves behind.
pub enum RunOutput {
    Slicing {
        records: Vec<MetricsRecord>,
        env: SlicingEnv,
        agent: Option<Td3Agent>,
    },
    Mec {
        records: Vec<MetricsRecord>,
        env: MecEnv,
        agent: Option<DqnAgent>,
    },
}

impl RunOutput {
    pub fn records(&self) -> &[MetricsRecord] {
        match self {
            RunOutput::Slicing { records, .. } | RunOutput::Mec { records, .. } => records,
        }
    }

    pub fn into_records(self) -> Vec<MetricsRecord> {
        match self {
            RunOutput::Slicing { records, .. } | RunOutput::Mec { records, .. } => records,
        }
    }
}

/// Runs the configured experiment in memory.
pub fn run(config: &ExperimentConfig) -> Result<RunOutput> {
    config.validate()?;
    match config.scenario {
        Scenario::SlicingAnalytic | Scenario::SlicingEmulated => run_slicing(config),
        Scenario::Mec => run_mec(config),
    }
}

/// Runs the experiment and writes its metrics, returning the file path.
/// `out` overrides the configured output.
pub fn run_experiment(config: &ExperimentConfig, out: Option<&Path>) -> Result<PathBuf> {
    let path = out.map(Path::to_path_buf).unwrap_or_else(|| config.output_path());
    let output = run(config)?;
    write_metrics(&path, output.records())?;
    Ok(path)
}

fn slicing_record(s: &SliceStep, config: &ExperimentConfig, env: &SlicingEnv) -> SlicingRecord {
    SlicingRecord {
        step: s.step,
        k: s.allocation.clone(),
        c: s.scores.clone(),
        utility: s.utility,
        mode: env.mode().as_str().to_string(),
        policy: config.policy.as_str().to_string(),
        budget: env.config().budget,
        policy_utility: None,
        critic_loss: None,
        actor_loss: None,
    }
}

fn run_slicing(config: &ExperimentConfig) -> Result<RunOutput> {
    let mode = config.scenario.slice_mode().expect("slicing scenario");
    let slice_cfg = config.slice_config();
    let n = slice_cfg.slice_count();
    let mut env = SlicingEnv::new(slice_cfg, mode, config.seed)?;
    let (total, explore) = (config.total_steps(), config.exploration_steps());
    let mut records = Vec::with_capacity(total as usize);
    let mut state = env.reset().to_vec();

    if config.policy != Policy::Td3 {
        let fixed = match config.policy {
            Policy::Sra => Some(sra(env.config())?.into_vec()),
            _ => None,
        };
        for t in 1..=total {
            let k = match &fixed {
                Some(k) => k.clone(),
                None => water_fill_optimal(&env.config().demands_at(t), env.config())?.into_vec(),
            };
            let s = env.step_allocation(&k)?;
            records.push(MetricsRecord::Slicing(slicing_record(&s, config, &env)));
        }
        return Ok(RunOutput::Slicing { records, env, agent: None });
    }

    let td3 = &config.td3;
    let dim = env.observation_dim();
    let mut agent = Td3Agent::new(dim, n, td3.clone(), &mut stream_rng(config.seed, Stream::Init))?;
    let mut agent_rng = stream_rng(config.seed, Stream::Agent);
    let mut replay_rng = stream_rng(config.seed, Stream::Replay);
    let mut buffer = ReplayBuffer::new(td3.buffer_capacity, dim, ActionShape::Continuous(n))?;
    for t in 1..=total {
        let phase = if t <= explore { ActionMode::Explore } else { ActionMode::Train };
        let action = agent.select_action(&state, phase, &mut agent_rng)?;
        let greedy = match mode {
            SliceMode::Analytic => {
                let a = agent.select_action(&state, ActionMode::Eval, &mut agent_rng)?;
                let k = map_action(&a, env.config())?;
                Some(utility(&env.analytic_scores(&k, t)?).value)
            }
            SliceMode::Emulated => None,
        };
        let s = env.step(&action)?;
        let next = s.observation.to_vec();
        buffer.push(Transition {
            state,
            action,
            reward: s.utility,
            next_state: next.clone(),
        })?;
        let mut rec = slicing_record(&s, config, &env);
        rec.policy_utility = greedy;
        if buffer.is_warm(td3.batch_size) {
            let batch = buffer.sample(td3.batch_size, &mut replay_rng)?;
            let losses = agent.train_step(&batch, &mut agent_rng)?;
            rec.critic_loss = Some(losses.critic_loss);
            rec.actor_loss = losses.actor_loss;
        }
        records.push(MetricsRecord::Slicing(rec));
        state = next;
    }
    Ok(RunOutput::Slicing {
        records,
        env,
        agent: Some(agent),
    })
}

fn mec_record(s: &MecStep, action: &[Choice], policy: Policy, epsilon: Option<f64>, loss: Option<f64>) -> MecRecord {
    MecRecord {
        slot: s.slot,
        action: action.iter().map(|c| c.code()).collect(),
        latencies: s.outcome.latencies.clone(),
        l_max: s.outcome.l_max,
        policy: policy.as_str().to_string(),
        epsilon,
        loss,
    }
}

fn run_mec(config: &ExperimentConfig) -> Result<RunOutput> {
    let mut env = MecEnv::new(config.mec_config(), config.seed)?;
    let (total, explore) = (config.total_steps(), config.exploration_steps());
    let mut records = Vec::with_capacity(total as usize);
    let mut state = env.reset();

    if config.policy != Policy::Dqn {
        let mut rng = stream_rng(config.seed, Stream::Baseline);
        for _ in 0..total {
            let action = match config.policy {
                Policy::Rra => rra(env.topology(), env.sizes(), &mut rng),
                _ => env.optimal(Execution::Sequential)?.0,
            };
            let s = env.step(&action)?;
            records.push(MetricsRecord::Mec(mec_record(&s, &action, config.policy, None, None)));
        }
        return Ok(RunOutput::Mec { records, env, agent: None });
    }

    let dqn = &config.dqn;
    let dim = env.observation_dim();
    let width = env.action_space().size();
    let mut agent = DqnAgent::new(dim, width, dqn.clone(), &mut stream_rng(config.seed, Stream::Init))?;
    let mut agent_rng = stream_rng(config.seed, Stream::Agent);
    let mut replay_rng = stream_rng(config.seed, Stream::Replay);
    let mut buffer = ReplayBuffer::new(dqn.buffer_capacity, dim, ActionShape::Discrete(width))?;
    let mut valid = env.valid_actions()?;
    for t in 1..=total {
        let phase = if t <= explore { Phase::Explore } else { Phase::Train };
        let index = agent.select_action(&state, &valid, phase, &mut agent_rng)?;
        let action = env.action_space().decode(index);
        let s = env.step(&action)?;
        let next_valid = env.valid_actions()?;
        buffer.push(Transition {
            state,
            action: MaskedAction {
                index,
                next_valid: next_valid.clone(),
            },
            reward: s.outcome.l_max,
            next_state: s.observation.clone(),
        })?;
        let loss = if buffer.is_warm(dqn.batch_size) {
            let batch = buffer.sample(dqn.batch_size, &mut replay_rng)?;
            Some(agent.train_step(&batch)?)
        } else {
            None
        };
        if t % dqn.target_sync_period == 0 {
            agent.sync_target();
        }
        records.push(MetricsRecord::Mec(mec_record(&s, &action, Policy::Dqn, Some(dqn.epsilon), loss)));
        state = s.observation;
        valid = next_valid;
    }
    Ok(RunOutput::Mec {
        records,
        env,
        agent: Some(agent),
    })
}

/// Per-slot latencies of the greedy agent, the exhaustive optimum and the
/// random baseline over the same slots.
#[derive(Debug, Clone, PartialEq)]
pub struct MecEvaluation {
    pub agent: Vec<f64>,
    pub optimal: Vec<f64>,
    pub random: Vec<f64>,
}

impl MecEvaluation {
    /// Fraction of slots where the agent is within `rel` of the optimum.
    pub fn near_optimal_fraction(&self, rel: f64) -> f64 {
        let hits = self
            .agent
            .iter()
            .zip(&self.optimal)
            .filter(|(a, o)| **a <= **o * (1.0 + rel))
            .count();
        hits as f64 / self.agent.len().max(1) as f64
    }
}

/// Continues `env` for `slots` slots under the greedy policy of `agent`,
/// scoring the oracle and a random policy on each slot without letting them
/// act.
pub fn evaluate_mec(agent: &DqnAgent, env: &mut MecEnv, slots: usize, seed: u64) -> Result<MecEvaluation> {
    let mut rng = stream_rng(seed, Stream::Evaluation);
    let mut state = env.observation();
    let mut out = MecEvaluation {
        agent: Vec::with_capacity(slots),
        optimal: Vec::with_capacity(slots),
        random: Vec::with_capacity(slots),
    };
    for _ in 0..slots {
        out.optimal.push(env.optimal(Execution::Sequential)?.1);
        let r = rra(env.topology(), env.sizes(), &mut rng);
        out.random.push(env.evaluate(&r)?.l_max);
        let valid = env.valid_actions()?;
        let index = agent.select_action(&state, &valid, Phase::Eval, &mut rng)?;
        let s = env.step_index(index)?;
        out.agent.push(s.outcome.l_max);
        state = s.observation;
    }
    Ok(out)
}

/// Runs the same experiment for each ε with identical seeds (and so identical
/// arrivals), returning the concatenated records in input order.
pub fn sweep_epsilon(config: &ExperimentConfig, values: &[f64], exec: Execution) -> Result<Vec<MetricsRecord>> {
    if config.policy != Policy::Dqn {
        return Err(Error::Config("epsilon sweeps need the dqn policy".into()));
    }
    if values.is_empty() {
        return Err(Error::Config("no epsilon values given".into()));
    }
    let runs = exec.map(values, |&eps| {
        let mut c = config.clone();
        c.dqn.epsilon = eps;
        run(&c).map(RunOutput::into_records)
    });
    let mut out = Vec::new();
    for r in runs {
        out.extend(r?);
    }
    Ok(out)
}
