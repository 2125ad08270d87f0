//! Bandwidth allocation across network slices.
//!
//! The agent's action `a ∈ [-1, 1]^I` is mapped to per-slice bandwidth by
//! [`map_action`]; each slice is scored and the reward is the product of the
//! scores. Two scoring modes exist:
//!
//! * **analytic**: the score depends only on how much of the slice's demand
//!   is met, so the optimum is known in closed form ([`water_fill_optimal`]);
//! * **emulated**: service traffic is pushed through per-slice FIFO queues
//!   ([`crate::traffic`]) and scored from completions, latency and the video
//!   completion flag.
//!
//! The observation of slice `i` is `(o_i, l_i, d_i)`: previous allocation
//! over `B`, mean latency over `l_i,0` (zero in analytic mode), and offered
//! traffic over `B`, laid out slice by slice.

mod allocation;
mod score;

pub use allocation::{map_action, random_feasible, sra, water_fill_optimal, Allocation};
pub use score::{score_analytic, score_emulated, utility, SliceScoreInputs, Utility, SCORE_EXPONENT};

use serde::{Deserialize, Serialize};

use crate::error::{ensure_dim, Error, Result};
use crate::seeding::{stream_rng, SimRng, Stream};
use crate::traffic::{generate, RequestQueue, ServiceProfile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SliceMode {
    Analytic,
    Emulated,
}

impl SliceMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SliceMode::Analytic => "analytic",
            SliceMode::Emulated => "emulated",
        }
    }
}

/// A change in offered load taking effect after `after_step` steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandChange {
    pub after_step: u64,
    /// New analytic demands.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub demands: Option<Vec<f64>>,
    /// New emulated load multipliers.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub load_scale: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceConfig {
    /// Total bandwidth `B`.
    pub budget: f64,
    pub k_min: Vec<f64>,
    pub k_max: Vec<f64>,
    /// Analytic demands `k_i,d`.
    pub demands: Vec<f64>,
    /// Ideal scores `c_i,0`.
    pub ideal_scores: Vec<f64>,
    /// Latency weights `l_i,0`, in the same time unit as `step_duration`.
    #[serde(default)]
    pub latency_weights: Vec<f64>,
    #[serde(default)]
    pub demand_changes: Vec<DemandChange>,
    /// One profile per slice; emulated mode only.
    #[serde(default)]
    pub services: Vec<ServiceProfile>,
    #[serde(default = "one")]
    pub step_duration: f64,
}

fn one() -> f64 {
    1.0
}

impl SliceConfig {
    /// Three slices, `B = 1.5`, demands (1, 1, 0.1) changing to (0.5, 1.5, 0.1)
    /// after step 4000.
    pub fn analytic_default() -> Self {
        Self {
            budget: 1.5,
            k_min: vec![0.075; 3],
            k_max: vec![1.5; 3],
            demands: vec![1.0, 1.0, 0.1],
            ideal_scores: vec![0.5, 0.5, 1.0],
            latency_weights: vec![1.0; 3],
            demand_changes: vec![DemandChange {
                after_step: 4000,
                demands: Some(vec![0.5, 1.5, 0.1]),
                load_scale: None,
            }],
            services: Vec::new(),
            step_duration: 1.0,
        }
    }

    /// Video, voice and chat slices sharing 4 bandwidth units; the video load
    /// halves and the voice load grows by half after step 4000.
    pub fn emulated_default() -> Self {
        Self {
            budget: 4.0,
            k_min: vec![0.2; 3],
            k_max: vec![4.0; 3],
            demands: vec![0.8, 0.6, 0.4],
            ideal_scores: vec![1.0; 3],
            latency_weights: vec![1.0; 3],
            demand_changes: vec![DemandChange {
                after_step: 4000,
                demands: Some(vec![0.4, 0.9, 0.4]),
                load_scale: Some(vec![0.5, 1.5, 1.0]),
            }],
            services: vec![
                ServiceProfile::default_video(),
                ServiceProfile::default_voice(),
                ServiceProfile::default_chat(),
            ],
            step_duration: 1.0,
        }
    }

    pub fn slice_count(&self) -> usize {
        self.k_min.len()
    }

    pub(crate) fn check_bounds(&self) -> Result<()> {
        let n = self.slice_count();
        if n == 0 {
            return Err(Error::Config("at least one slice is required".into()));
        }
        if !(self.budget > 0.0) {
            return Err(Error::Config(format!("budget must be positive, got {}", self.budget)));
        }
        ensure_dim("k_max", n, self.k_max.len())?;
        for i in 0..n {
            let (lo, hi) = (self.k_min[i], self.k_max[i]);
            if !(lo > 0.0 && lo <= hi && hi <= self.budget) {
                return Err(Error::Infeasible(format!(
                    "slice {i}: need 0 < k_min ({lo}) <= k_max ({hi}) <= B ({})",
                    self.budget
                )));
            }
        }
        let floor: f64 = self.k_min.iter().sum();
        if floor > self.budget {
            return Err(Error::Infeasible(format!(
                "minimum shares sum to {floor}, more than the budget {}",
                self.budget
            )));
        }
        Ok(())
    }

    pub fn validate(&self, mode: SliceMode) -> Result<()> {
        self.check_bounds()?;
        let n = self.slice_count();
        let dims = [
            ("demands", self.demands.len()),
            ("ideal_scores", self.ideal_scores.len()),
            ("latency_weights", self.latency_weights.len()),
        ];
        for (name, len) in dims {
            if len != n {
                return Err(Error::Config(format!("{name} has {len} entries for {n} slices")));
            }
        }
        if self.demands.iter().any(|&d| !(d > 0.0)) {
            return Err(Error::Config("demands must be positive".into()));
        }
        if self.ideal_scores.iter().any(|&c| !(c > 0.0)) {
            return Err(Error::Config("ideal scores must be positive".into()));
        }
        if self.latency_weights.iter().any(|&l| !(l > 0.0)) {
            return Err(Error::Config("latency weights must be positive".into()));
        }
        if !(self.step_duration > 0.0) {
            return Err(Error::Config("step_duration must be positive".into()));
        }
        for change in &self.demand_changes {
            if let Some(d) = &change.demands {
                if d.len() != n || d.iter().any(|&v| !(v > 0.0)) {
                    return Err(Error::Config(format!("bad demand change {d:?}")));
                }
            }
            if let Some(s) = &change.load_scale {
                if s.len() != n || s.iter().any(|&v| !(v >= 0.0)) {
                    return Err(Error::Config(format!("bad load scale {s:?}")));
                }
            }
        }
        if mode == SliceMode::Emulated {
            if self.services.len() != n {
                return Err(Error::Config(format!(
                    "emulated mode needs one service per slice, got {}",
                    self.services.len()
                )));
            }
            for s in &self.services {
                s.validate()?;
            }
        }
        Ok(())
    }

    /// Demands in force during step `step` (1-based).
    pub fn demands_at(&self, step: u64) -> Vec<f64> {
        self.latest_change(step)
            .and_then(|c| c.demands.clone())
            .unwrap_or_else(|| self.demands.clone())
    }

    pub fn load_scale_at(&self, step: u64) -> Vec<f64> {
        self.latest_change(step)
            .and_then(|c| c.load_scale.clone())
            .unwrap_or_else(|| vec![1.0; self.slice_count()])
    }

    fn latest_change(&self, step: u64) -> Option<&DemandChange> {
        self.demand_changes
            .iter()
            .filter(|c| step > c.after_step)
            .max_by_key(|c| c.after_step)
    }

    /// Distinct demand phases as `(first step, demands)`.
    pub fn demand_phases(&self) -> Vec<(u64, Vec<f64>)> {
        let mut phases = vec![(1, self.demands.clone())];
        let mut changes: Vec<_> = self.demand_changes.iter().filter(|c| c.demands.is_some()).collect();
        changes.sort_by_key(|c| c.after_step);
        for c in changes {
            phases.push((c.after_step + 1, c.demands.clone().expect("filtered")));
        }
        phases
    }
}

/// Per-slice `(o, l, d)` observation.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceObservation {
    pub previous_share: Vec<f64>,
    pub latency: Vec<f64>,
    pub traffic: Vec<f64>,
}

impl SliceObservation {
    /// Flattened slice by slice: `[o_1, l_1, d_1, o_2, ...]`.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(3 * self.previous_share.len());
        for i in 0..self.previous_share.len() {
            v.extend([self.previous_share[i], self.latency[i], self.traffic[i]]);
        }
        v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SliceStep {
    /// 1-based index of the step just taken.
    pub step: u64,
    pub allocation: Vec<f64>,
    pub scores: Vec<f64>,
    pub utility: f64,
    pub degenerate: bool,
    pub observation: SliceObservation,
}

pub struct SlicingEnv {
    config: SliceConfig,
    mode: SliceMode,
    traffic_rng: SimRng,
    seed: u64,
    queues: Vec<RequestQueue>,
    steps_taken: u64,
    ready: bool,
    last: Option<SliceObservation>,
}

impl SlicingEnv {
    pub fn new(config: SliceConfig, mode: SliceMode, seed: u64) -> Result<Self> {
        config.validate(mode)?;
        Ok(Self {
            queues: Vec::new(),
            traffic_rng: stream_rng(seed, Stream::Traffic),
            seed,
            config,
            mode,
            steps_taken: 0,
            ready: false,
            last: None,
        })
    }

    pub fn config(&self) -> &SliceConfig {
        &self.config
    }

    pub fn mode(&self) -> SliceMode {
        self.mode
    }

    pub fn steps_taken(&self) -> u64 {
        self.steps_taken
    }

    pub fn observation_dim(&self) -> usize {
        3 * self.config.slice_count()
    }

    pub fn reset(&mut self) -> SliceObservation {
        self.traffic_rng = stream_rng(self.seed, Stream::Traffic);
        self.queues = self.config.services.iter().map(RequestQueue::new).collect();
        self.steps_taken = 0;
        self.ready = true;
        let n = self.config.slice_count();
        let b = self.config.budget;
        let even = (b / n as f64).clamp(
            self.config.k_min.iter().cloned().fold(f64::MAX, f64::min),
            b,
        );
        let traffic = match self.mode {
            SliceMode::Analytic => self.config.demands.iter().map(|d| d / b).collect(),
            SliceMode::Emulated => vec![0.0; n],
        };
        let obs = SliceObservation {
            previous_share: vec![even / b; n],
            latency: vec![0.0; n],
            traffic,
        };
        self.last = Some(obs.clone());
        obs
    }

    /// Scores of an allocation under the analytic model at step `step`,
    /// without touching the environment.
    pub fn analytic_scores(&self, k: &[f64], step: u64) -> Result<Vec<f64>> {
        score_analytic(k, &self.config.demands_at(step), &self.config.ideal_scores)
    }

    pub fn step(&mut self, action: &[f64]) -> Result<SliceStep> {
        let k = map_action(action, &self.config)?.into_vec();
        self.step_allocation(&k)
    }

    /// Applies an allocation directly (baselines bypass the action mapping).
    pub fn step_allocation(&mut self, k: &[f64]) -> Result<SliceStep> {
        if !self.ready {
            return Err(Error::NotReset);
        }
        Allocation::checked(k.to_vec(), &self.config, 1e-9)?;
        let t = self.steps_taken + 1;
        let b = self.config.budget;
        let n = self.config.slice_count();
        let (scores, latency, traffic) = match self.mode {
            SliceMode::Analytic => {
                let demands = self.config.demands_at(t);
                let scores = score_analytic(k, &demands, &self.config.ideal_scores)?;
                (scores, vec![0.0; n], demands.iter().map(|d| d / b).collect())
            }
            SliceMode::Emulated => {
                let load = self.config.load_scale_at(t);
                let dt = self.config.step_duration;
                let mut inputs = SliceScoreInputs {
                    completed: Vec::with_capacity(n),
                    latency: Vec::with_capacity(n),
                    video_flag: Vec::with_capacity(n),
                };
                let mut traffic = Vec::with_capacity(n);
                for i in 0..n {
                    let arrivals = generate(&self.config.services[i], t - 1, load[i], &mut self.traffic_rng);
                    let offered: f64 = arrivals.iter().map(|a| a.size).sum();
                    self.queues[i].enqueue(t - 1, &arrivals);
                    let out = self.queues[i].serve(k[i], dt, t - 1)?;
                    inputs.completed.push(out.completed() as f64);
                    inputs.latency.push(out.mean_latency);
                    inputs.video_flag.push(out.video_flag);
                    traffic.push(offered / (dt * b));
                }
                let scores =
                    score_emulated(&inputs, &self.config.latency_weights, &self.config.ideal_scores)?;
                let latency = inputs
                    .latency
                    .iter()
                    .zip(&self.config.latency_weights)
                    .map(|(l, l0)| l / l0)
                    .collect();
                (scores, latency, traffic)
            }
        };
        let u = utility(&scores);
        let observation = SliceObservation {
            previous_share: k.iter().map(|v| v / b).collect(),
            latency,
            traffic,
        };
        self.steps_taken = t;
        self.last = Some(observation.clone());
        Ok(SliceStep {
            step: t,
            allocation: k.to_vec(),
            scores,
            utility: u.value,
            degenerate: u.degenerate,
            observation,
        })
    }

    pub fn queues(&self) -> &[RequestQueue] {
        &self.queues
    }
}
