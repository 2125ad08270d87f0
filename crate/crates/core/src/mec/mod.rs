//! Task offloading across edge servers.
//!
//! Every slot each server receives a task. The part that fits within the
//! latency bound `τ` runs locally; the overflow goes to the core or to a
//! neighbour with spare cycles. The slot objective is the largest per-server
//! latency `L(t)`.

mod actions;
mod latency;
mod topology;

pub use actions::{enumerate_actions, server_options, validate_action, ActionSpace, JointAction};
pub use latency::{
    contention_resolve, latency_core, latency_local, latency_offload, route_latencies, split_task, Route,
};
pub use topology::{Area, ArrivalConfig, ArrivalMode, EdgeTopology, Link, MecConfig, ServerKind, ServerSpec};

use rand::Rng;

use crate::error::{ensure_dim, Error, Result};
use crate::exec::Execution;
use crate::seeding::{stream_rng, SimRng, Stream};

/// One server's decision for its overflow. Servers are numbered from 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Choice {
    /// Nothing to offload.
    NoOp,
    Core,
    Neighbor(usize),
}

impl Choice {
    /// Metrics encoding: 0 no-op, −1 core, `j + 1` for neighbour `j`.
    pub fn code(self) -> i64 {
        match self {
            Choice::NoOp => 0,
            Choice::Core => -1,
            Choice::Neighbor(j) => j as i64 + 1,
        }
    }

    pub fn from_code(code: i64) -> Result<Self> {
        match code {
            0 => Ok(Choice::NoOp),
            -1 => Ok(Choice::Core),
            c if c > 0 => Ok(Choice::Neighbor(c as usize - 1)),
            c => Err(Error::InvalidAction(format!("unknown action code {c}"))),
        }
    }
}

/// Result of applying a joint action to one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotOutcome {
    pub routes: Vec<Route>,
    pub latencies: Vec<f64>,
    /// `max_i L_i`.
    pub l_max: f64,
}

/// Pure evaluation of a slot; validates the action first.
pub fn evaluate(topology: &EdgeTopology, sizes: &[f64], action: &[Choice]) -> Result<SlotOutcome> {
    validate_action(topology, sizes, action)?;
    let routes = contention_resolve(topology, sizes, action);
    let latencies = route_latencies(topology, sizes, &routes);
    let l_max = latencies.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(SlotOutcome { routes, latencies, l_max })
}

/// Exhaustive minimiser of `L(t)`; ties go to the first action in
/// enumeration order.
pub fn brute_force_optimal(
    topology: &EdgeTopology,
    sizes: &[f64],
    ceiling: u128,
    exec: Execution,
) -> Result<(JointAction, f64)> {
    let capable: Vec<bool> = (0..sizes.len()).map(|i| topology.overflows(i, sizes[i])).collect();
    let space = ActionSpace::new(topology, &capable, ceiling)?;
    let valid = space.valid_indices(topology, sizes)?;
    let costs = exec.map(&valid, |&idx| {
        let a = space.decode(idx);
        let routes = contention_resolve(topology, sizes, &a);
        route_latencies(topology, sizes, &routes)
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max)
    });
    let mut best = 0;
    for (k, &c) in costs.iter().enumerate() {
        if c < costs[best] {
            best = k;
        }
    }
    Ok((space.decode(valid[best]), costs[best]))
}

/// Uniform choice over `{core} ∪ 𝒩_i` for every overflowing server.
pub fn rra<R: Rng + ?Sized>(topology: &EdgeTopology, sizes: &[f64], rng: &mut R) -> JointAction {
    (0..sizes.len())
        .map(|i| {
            let opts = server_options(topology, i, sizes[i]);
            if opts.len() == 1 {
                opts[0]
            } else {
                opts[rng.random_range(0..opts.len())]
            }
        })
        .collect()
}

/// Outcome of [`MecEnv::step`].
#[derive(Debug, Clone, PartialEq)]
pub struct MecStep {
    /// 1-based slot index just played.
    pub slot: u64,
    pub sizes: Vec<f64>,
    pub outcome: SlotOutcome,
    /// Observation for the next slot.
    pub observation: Vec<f64>,
}

pub struct MecEnv {
    config: MecConfig,
    topology: EdgeTopology,
    space: ActionSpace,
    latency_ref: f64,
    seed: u64,
    rng: SimRng,
    sizes: Vec<f64>,
    last_latency: Vec<f64>,
    last_action: Vec<Choice>,
    slot: u64,
    ready: bool,
}

impl MecEnv {
    pub fn new(config: MecConfig, seed: u64) -> Result<Self> {
        let topology = config.topology()?;
        let n = topology.server_count();
        let arr = &config.arrivals;
        let capable: Vec<bool> = match (&arr.sizes, arr.mode) {
            (Some(s), ArrivalMode::Fixed) => (0..n).map(|i| topology.overflows(i, s[i])).collect(),
            _ => (0..n)
                .map(|i| topology.overflows(i, arr.range(topology.area(i))[1]))
                .collect(),
        };
        let space = ActionSpace::new(&topology, &capable, config.action_ceiling)?;
        let max_size = match &arr.sizes {
            Some(s) if arr.mode == ArrivalMode::Fixed => s.iter().cloned().fold(0.0, f64::max),
            _ => arr.area_a[1].max(arr.area_b[1]),
        };
        let latency_ref = config
            .latency_ref
            .unwrap_or(2.0 * topology.tau + max_size / topology.min_rate());
        Ok(Self {
            rng: stream_rng(seed, Stream::Environment),
            sizes: vec![0.0; n],
            last_latency: vec![0.0; n],
            last_action: vec![Choice::NoOp; n],
            config,
            topology,
            space,
            latency_ref,
            seed,
            slot: 0,
            ready: false,
        })
    }

    pub fn config(&self) -> &MecConfig {
        &self.config
    }

    pub fn topology(&self) -> &EdgeTopology {
        &self.topology
    }

    pub fn action_space(&self) -> &ActionSpace {
        &self.space
    }

    pub fn latency_ref(&self) -> f64 {
        self.latency_ref
    }

    /// Task sizes of the slot about to be played.
    pub fn sizes(&self) -> &[f64] {
        &self.sizes
    }

    pub fn slot(&self) -> u64 {
        self.slot
    }

    pub fn observation_dim(&self) -> usize {
        (0..self.topology.server_count())
            .map(|i| 3 + self.topology.neighbors(i).len())
            .sum()
    }

    fn draw_sizes(&mut self) {
        let arr = &self.config.arrivals;
        if let (ArrivalMode::Fixed, Some(s)) = (arr.mode, &arr.sizes) {
            self.sizes = s.clone();
            return;
        }
        if arr.mode == ArrivalMode::Fixed && self.slot > 0 {
            return;
        }
        for i in 0..self.topology.server_count() {
            let [lo, hi] = arr.range(self.topology.area(i));
            self.sizes[i] = if hi > lo { self.rng.random_range(lo..=hi) } else { lo };
        }
    }

    pub fn reset(&mut self) -> Vec<f64> {
        let n = self.topology.server_count();
        self.rng = stream_rng(self.seed, Stream::Environment);
        self.slot = 0;
        self.last_latency = vec![0.0; n];
        self.last_action = vec![Choice::NoOp; n];
        self.draw_sizes();
        self.ready = true;
        self.observation()
    }

    /// Per server: `d_i = L_i / L_ref` clipped to `[0, 1]`, then a one-hot
    /// of the previous choice over `(no-op, core, neighbours…)`.
    pub fn observation(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.observation_dim());
        for i in 0..self.topology.server_count() {
            v.push((self.last_latency[i] / self.latency_ref).clamp(0.0, 1.0));
            let nbrs = self.topology.neighbors(i);
            let hot = match self.last_action[i] {
                Choice::NoOp => 0,
                Choice::Core => 1,
                Choice::Neighbor(j) => 2 + nbrs.iter().position(|&x| x == j).expect("validated neighbour"),
            };
            v.extend((0..2 + nbrs.len()).map(|k| if k == hot { 1.0 } else { 0.0 }));
        }
        v
    }

    /// Encoded indices valid for the current slot.
    pub fn valid_actions(&self) -> Result<Vec<usize>> {
        self.space.valid_indices(&self.topology, &self.sizes)
    }

    /// Evaluates `action` on the current slot without advancing.
    pub fn evaluate(&self, action: &[Choice]) -> Result<SlotOutcome> {
        evaluate(&self.topology, &self.sizes, action)
    }

    pub fn optimal(&self, exec: Execution) -> Result<(JointAction, f64)> {
        brute_force_optimal(&self.topology, &self.sizes, self.config.action_ceiling, exec)
    }

    pub fn step(&mut self, action: &[Choice]) -> Result<MecStep> {
        if !self.ready {
            return Err(Error::NotReset);
        }
        ensure_dim("joint action", self.topology.server_count(), action.len())?;
        let outcome = self.evaluate(action)?;
        let sizes = self.sizes.clone();
        self.slot += 1;
        self.last_latency = outcome.latencies.clone();
        self.last_action = action.to_vec();
        self.draw_sizes();
        Ok(MecStep {
            slot: self.slot,
            sizes,
            outcome,
            observation: self.observation(),
        })
    }

    pub fn step_index(&mut self, index: usize) -> Result<MecStep> {
        if index >= self.space.size() {
            return Err(Error::InvalidAction(format!(
                "action index {index} outside 0..{}",
                self.space.size()
            )));
        }
        let action = self.space.decode(index);
        self.step(&action)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::rng_from_seed;

    fn sized(cfg: MecConfig, sizes: Vec<f64>) -> MecEnv {
        let mut cfg = cfg;
        cfg.arrivals.sizes = Some(sizes);
        let mut env = MecEnv::new(cfg, 0).unwrap();
        env.reset();
        env
    }

    #[test]
    fn no_overflow_forces_noop() {
        let env = sized(MecConfig::seven_server(), vec![8.0, 2.0, 20.0, 5.0, 10.0, 3.0, 30.0]);
        assert_eq!(env.valid_actions().unwrap().len(), 1);
        let out = env.evaluate(&[Choice::NoOp; 7]).unwrap();
        assert!((out.l_max - 0.1).abs() < 1e-15);
        assert_eq!(out.latencies[0], 0.08);
    }

    #[test]
    fn single_overflow_to_core() {
        let env = sized(MecConfig::seven_server(), vec![25.0, 2.0, 20.0, 5.0, 10.0, 3.0, 3.0]);
        let mut a = vec![Choice::NoOp; 7];
        a[0] = Choice::Core;
        let out = env.evaluate(&a).unwrap();
        assert!((out.latencies[0] - 0.2).abs() < 1e-15);
        assert_eq!(out.l_max, out.latencies[0]);
    }

    #[test]
    fn contention_picks_largest_overflow() {
        let mut cfg = MecConfig::four_server();
        cfg.servers[2].capacity = Some(10_000.0);
        let env = sized(cfg, vec![15.0, 18.0, 1.0, 1.0]);
        let a = [Choice::Neighbor(2), Choice::Neighbor(2), Choice::NoOp, Choice::NoOp];
        let out = env.evaluate(&a).unwrap();
        assert_eq!(out.routes[0], Route::Rejected(2));
        assert_eq!(out.routes[1], Route::Neighbor(2));
        assert!((out.latencies[0] - latency_core(5.0, 0.1, 150.0)).abs() < 1e-15);
    }

    #[test]
    fn ties_go_to_lowest_source() {
        let mut cfg = MecConfig::four_server();
        cfg.servers[2].capacity = Some(10_000.0);
        let env = sized(cfg, vec![15.0, 15.0, 1.0, 1.0]);
        let a = [Choice::Neighbor(2), Choice::Neighbor(2), Choice::NoOp, Choice::NoOp];
        let out = env.evaluate(&a).unwrap();
        assert_eq!(out.routes[0], Route::Neighbor(2));
        assert_eq!(out.routes[1], Route::Rejected(2));
    }

    #[test]
    fn spare_capacity_limits_acceptance() {
        // gNB 3 with S = 25 has room for 5 more units within τ.
        let env = sized(MecConfig::four_server(), vec![14.0, 16.0, 25.0, 1.0]);
        let a = [Choice::Neighbor(2), Choice::Neighbor(2), Choice::NoOp, Choice::NoOp];
        let out = env.evaluate(&a).unwrap();
        assert_eq!(out.routes[0], Route::Neighbor(2));
        assert_eq!(out.routes[1], Route::Rejected(2));
    }

    #[test]
    fn overflowing_target_refuses() {
        let env = sized(MecConfig::four_server(), vec![14.0, 16.0, 1.0, 1.0]);
        let a = [Choice::Neighbor(1), Choice::Core, Choice::NoOp, Choice::NoOp];
        let out = env.evaluate(&a).unwrap();
        assert_eq!(out.routes[0], Route::Rejected(1));
    }

    #[test]
    fn oracle_prefers_faster_neighbour() {
        let env = sized(MecConfig::four_server(), vec![20.0, 5.0, 5.0, 5.0]);
        let (a, l) = env.optimal(Execution::Sequential).unwrap();
        assert_eq!(a[0], Choice::Neighbor(2));
        let core = latency_core(10.0, 0.1, 150.0);
        assert!(l < core);
    }

    #[test]
    fn oracle_singleton() {
        let env = sized(MecConfig::seven_server(), vec![1.0; 7]);
        let (a, l) = env.optimal(Execution::Sequential).unwrap();
        assert_eq!(a, vec![Choice::NoOp; 7]);
        assert_eq!(l, env.evaluate(&a).unwrap().l_max);
    }

    #[test]
    fn oracle_dominates_random_actions() {
        let mut cfg = MecConfig::seven_server();
        cfg.arrivals.mode = ArrivalMode::Uniform;
        let mut env = MecEnv::new(cfg, 11).unwrap();
        env.reset();
        let mut rng = rng_from_seed(4);
        for _ in 0..20 {
            let (_, best) = env.optimal(Execution::default()).unwrap();
            for _ in 0..50 {
                let a = rra(env.topology(), env.sizes(), &mut rng);
                assert!(best <= env.evaluate(&a).unwrap().l_max);
            }
            let a = rra(env.topology(), env.sizes(), &mut rng);
            env.step(&a).unwrap();
        }
    }

    #[test]
    fn rra_is_uniform_over_five_choices() {
        let t = MecConfig::seven_server().topology().unwrap();
        let sizes = [1.0, 1.0, 50.0, 1.0, 1.0, 1.0, 1.0];
        let mut rng = rng_from_seed(8);
        let mut counts = std::collections::HashMap::new();
        let draws = 100_000;
        for _ in 0..draws {
            let a = rra(&t, &sizes, &mut rng);
            assert!(a.iter().enumerate().all(|(i, c)| i == 2 || *c == Choice::NoOp));
            *counts.entry(a[2]).or_insert(0u32) += 1;
        }
        assert_eq!(counts.len(), 5);
        for c in counts.values() {
            assert!((*c as f64 / draws as f64 - 0.2).abs() < 0.01);
        }
    }

    #[test]
    fn rra_is_seeded() {
        let t = MecConfig::seven_server().topology().unwrap();
        let sizes = [20.0, 1.0, 50.0, 20.0, 1.0, 1.0, 1.0];
        let draw = |s| {
            let mut rng = rng_from_seed(s);
            (0..20).map(|_| rra(&t, &sizes, &mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(draw(1), draw(1));
    }

    #[test]
    fn seven_server_state_and_action_width() {
        let mut env = MecEnv::new(MecConfig::seven_server(), 3).unwrap();
        let obs = env.reset();
        assert_eq!(obs.len(), 41);
        assert_eq!(env.observation_dim(), 41);
        assert_eq!(env.action_space().size(), 25);
        assert!((env.latency_ref() - (0.2 + 30.0 / 150.0)).abs() < 1e-15);
    }

    #[test]
    fn fixed_arrivals_hold_and_observation_tracks_action() {
        let mut env = MecEnv::new(MecConfig::seven_server(), 5).unwrap();
        env.reset();
        let first = env.sizes().to_vec();
        let valid = env.valid_actions().unwrap();
        let s = env.step_index(*valid.last().unwrap()).unwrap();
        assert_eq!(env.sizes(), first.as_slice());
        assert_eq!(s.slot, 1);
        let obs = &s.observation;
        assert!(obs.iter().all(|x| (0.0..=1.0).contains(x)));
        let mut offset = 0;
        for i in 0..7 {
            let width = 2 + env.topology().neighbors(i).len();
            let hot: f64 = obs[offset + 1..offset + 1 + width].iter().sum();
            assert_eq!(hot, 1.0);
            offset += 1 + width;
        }
    }

    #[test]
    fn step_before_reset() {
        let mut env = MecEnv::new(MecConfig::seven_server(), 0).unwrap();
        assert!(matches!(env.step(&[Choice::NoOp; 7]), Err(Error::NotReset)));
    }

    #[test]
    fn action_codes_round_trip() {
        for c in [Choice::NoOp, Choice::Core, Choice::Neighbor(0), Choice::Neighbor(6)] {
            assert_eq!(Choice::from_code(c.code()).unwrap(), c);
        }
        assert!(Choice::from_code(-2).is_err());
    }
}
