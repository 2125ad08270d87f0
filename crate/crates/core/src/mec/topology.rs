use serde::{Deserialize, Serialize};

use super::latency::split_task;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Area {
    A,
    B,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ServerKind {
    Enb,
    Gnb,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServerSpec {
    pub area: Area,
    pub kind: ServerKind,
    /// Overrides the per-kind default capacity.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capacity: Option<f64>,
}

/// Undirected link between two servers, numbered from 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub a: usize,
    pub b: usize,
    /// Overrides `link_rate`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArrivalMode {
    /// Sizes drawn once at reset (or given explicitly) and held for the run.
    Fixed,
    /// Fresh uniform draws every slot.
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrivalConfig {
    pub mode: ArrivalMode,
    /// Size range `[lo, hi]` for Area A servers.
    pub area_a: [f64; 2],
    pub area_b: [f64; 2],
    /// Explicit fixed sizes, one per server.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sizes: Option<Vec<f64>>,
}

impl Default for ArrivalConfig {
    fn default() -> Self {
        Self {
            mode: ArrivalMode::Fixed,
            area_a: [8.0, 30.0],
            area_b: [2.0, 10.0],
            sizes: None,
        }
    }
}

impl ArrivalConfig {
    pub fn range(&self, area: Area) -> [f64; 2] {
        match area {
            Area::A => self.area_a,
            Area::B => self.area_b,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MecConfig {
    pub servers: Vec<ServerSpec>,
    pub links: Vec<Link>,
    pub link_rate: f64,
    pub core_rate: f64,
    pub tau: f64,
    pub cycles_per_bit: f64,
    pub enb_capacity: f64,
    pub gnb_capacity: f64,
    pub arrivals: ArrivalConfig,
    pub action_ceiling: u128,
    /// Latency normaliser for observations; defaults to `2τ + max S / min R`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub latency_ref: Option<f64>,
}

impl Default for MecConfig {
    fn default() -> Self {
        Self::seven_server()
    }
}

fn complete_graph(ids: &[usize]) -> Vec<Link> {
    let mut links = Vec::new();
    for (x, &a) in ids.iter().enumerate() {
        for &b in &ids[x + 1..] {
            links.push(Link { a, b, rate: None });
        }
    }
    links
}

impl MecConfig {
    /// Seven servers: 1 A/eNB, 2 B/eNB, 3 A/gNB, 4 A/eNB, 5 B/gNB, 6 B/eNB,
    /// 7 A/gNB. Each area is fully connected and servers 3 and 5 bridge them.
    pub fn seven_server() -> Self {
        use Area::*;
        use ServerKind::*;
        let layout = [(A, Enb), (B, Enb), (A, Gnb), (A, Enb), (B, Gnb), (B, Enb), (A, Gnb)];
        let servers = layout
            .iter()
            .map(|&(area, kind)| ServerSpec { area, kind, capacity: None })
            .collect();
        let mut links = complete_graph(&[1, 3, 4, 7]);
        links.extend(complete_graph(&[2, 5, 6]));
        links.push(Link { a: 3, b: 5, rate: None });
        Self {
            servers,
            links,
            link_rate: 150.0,
            core_rate: 150.0,
            tau: 0.1,
            cycles_per_bit: 10.0,
            enb_capacity: 1000.0,
            gnb_capacity: 3000.0,
            arrivals: ArrivalConfig::default(),
            action_ceiling: 1_000_000,
            latency_ref: None,
        }
    }

    /// Two Area A eNBs, one Area A gNB and one Area B gNB, fully connected,
    /// with inter-server links four times faster than the core link. Area A
    /// tasks start at 12 units, so both eNBs always overflow and 16 joint
    /// actions are valid in every slot.
    pub fn four_server() -> Self {
        use Area::*;
        use ServerKind::*;
        let layout = [(A, Enb), (A, Enb), (A, Gnb), (B, Gnb)];
        Self {
            servers: layout
                .iter()
                .map(|&(area, kind)| ServerSpec { area, kind, capacity: None })
                .collect(),
            links: complete_graph(&[1, 2, 3, 4]),
            link_rate: 600.0,
            arrivals: ArrivalConfig {
                area_a: [12.0, 30.0],
                ..ArrivalConfig::default()
            },
            ..Self::seven_server()
        }
    }

    pub fn topology(&self) -> Result<EdgeTopology> {
        EdgeTopology::from_config(self)
    }
}

/// Validated, index-friendly view of a [`MecConfig`]. Servers are numbered
/// from 0 here.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeTopology {
    capacities: Vec<f64>,
    areas: Vec<Area>,
    neighbors: Vec<Vec<usize>>,
    rates: Vec<Vec<f64>>,
    pub core_rate: f64,
    pub tau: f64,
    pub cycles_per_bit: f64,
}

impl EdgeTopology {
    pub fn from_config(cfg: &MecConfig) -> Result<Self> {
        let n = cfg.servers.len();
        if n == 0 {
            return Err(Error::Config("at least one edge server is required".into()));
        }
        for (name, v) in [
            ("link_rate", cfg.link_rate),
            ("core_rate", cfg.core_rate),
            ("tau", cfg.tau),
            ("cycles_per_bit", cfg.cycles_per_bit),
            ("enb_capacity", cfg.enb_capacity),
            ("gnb_capacity", cfg.gnb_capacity),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive and finite, got {v}")));
            }
        }
        let capacities: Vec<f64> = cfg
            .servers
            .iter()
            .map(|s| {
                s.capacity.unwrap_or(match s.kind {
                    ServerKind::Enb => cfg.enb_capacity,
                    ServerKind::Gnb => cfg.gnb_capacity,
                })
            })
            .collect();
        if let Some(c) = capacities.iter().find(|c| !(**c > 0.0 && c.is_finite())) {
            return Err(Error::Config(format!("server capacity must be positive, got {c}")));
        }
        let mut rates = vec![vec![0.0; n]; n];
        for link in &cfg.links {
            let (a, b) = (link.a, link.b);
            if a == 0 || b == 0 || a > n || b > n || a == b {
                return Err(Error::Config(format!("bad link {a}-{b} for {n} servers")));
            }
            let rate = link.rate.unwrap_or(cfg.link_rate);
            if !(rate > 0.0 && rate.is_finite()) {
                return Err(Error::Config(format!("link {a}-{b} rate must be positive, got {rate}")));
            }
            if rates[a - 1][b - 1] != 0.0 {
                return Err(Error::Config(format!("duplicate link {a}-{b}")));
            }
            rates[a - 1][b - 1] = rate;
            rates[b - 1][a - 1] = rate;
        }
        let neighbors = (0..n)
            .map(|i| (0..n).filter(|&j| rates[i][j] > 0.0).collect())
            .collect();
        let arr = &cfg.arrivals;
        for (name, [lo, hi]) in [("area_a", arr.area_a), ("area_b", arr.area_b)] {
            if !(lo >= 0.0 && lo <= hi && hi.is_finite()) {
                return Err(Error::Config(format!("arrival range {name} [{lo}, {hi}] is invalid")));
            }
        }
        if let Some(sizes) = &arr.sizes {
            if sizes.len() != n || sizes.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
                return Err(Error::Config(format!("fixed sizes {sizes:?} must be {n} non-negative values")));
            }
        }
        if let Some(l) = cfg.latency_ref {
            if !(l > 0.0) {
                return Err(Error::Config(format!("latency_ref must be positive, got {l}")));
            }
        }
        Ok(Self {
            capacities,
            areas: cfg.servers.iter().map(|s| s.area).collect(),
            neighbors,
            rates,
            core_rate: cfg.core_rate,
            tau: cfg.tau,
            cycles_per_bit: cfg.cycles_per_bit,
        })
    }

    pub fn server_count(&self) -> usize {
        self.capacities.len()
    }

    pub fn capacity(&self, i: usize) -> f64 {
        self.capacities[i]
    }

    pub fn area(&self, i: usize) -> Area {
        self.areas[i]
    }

    /// Neighbours of `i` in ascending order.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn link_rate(&self, i: usize, j: usize) -> Option<f64> {
        let r = self.rates[i][j];
        (r > 0.0).then_some(r)
    }

    /// Largest task `τC_i/v` server `i` finishes within `τ`.
    pub fn local_limit(&self, i: usize) -> f64 {
        self.tau * self.capacities[i] / self.cycles_per_bit
    }

    pub fn split(&self, i: usize, size: f64) -> (f64, f64) {
        split_task(size, self.capacities[i], self.tau, self.cycles_per_bit)
    }

    pub fn overflows(&self, i: usize, size: f64) -> bool {
        self.split(i, size).1 > 0.0
    }

    /// Slowest link in the system, core included.
    pub fn min_rate(&self) -> f64 {
        self.rates
            .iter()
            .flatten()
            .filter(|r| **r > 0.0)
            .fold(self.core_rate, |m, &r| m.min(r))
    }
}
