//! Per-slot latency model: task splitting, the three processing branches and
//! contention for neighbour capacity.

use super::topology::EdgeTopology;
use super::Choice;

/// Splits a task of size `s` into the part an edge server can finish within
/// `tau` and the overflow: `(min(s, τC/v), max(0, s − τC/v))`.
pub fn split_task(s: f64, capacity: f64, tau: f64, cycles_per_bit: f64) -> (f64, f64) {
    let local = tau * capacity / cycles_per_bit;
    if s <= local {
        (s, 0.0)
    } else {
        (local, s - local)
    }
}

/// Computing latency `vS/C` of a task processed fully in place.
pub fn latency_local(s: f64, capacity: f64, cycles_per_bit: f64) -> f64 {
    cycles_per_bit * s / capacity
}

/// `τ + S̄/R_c`; the core's own compute time is ignored.
pub fn latency_core(overflow: f64, tau: f64, core_rate: f64) -> f64 {
    tau + overflow / core_rate
}

/// `τ + S̄/R_ij + vS̄/C_j`, with the target's full capacity.
pub fn latency_offload(overflow: f64, tau: f64, link_rate: f64, target_capacity: f64, cycles_per_bit: f64) -> f64 {
    tau + overflow / link_rate + cycles_per_bit * overflow / target_capacity
}

/// Where a server's overflow ended up.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    /// No overflow; everything ran locally.
    Local,
    Core,
    /// Accepted by neighbour `j`.
    Neighbor(usize),
    /// Asked neighbour `j`, was refused and went to the core.
    Rejected(usize),
}

impl Route {
    pub fn target(self) -> Option<usize> {
        match self {
            Route::Neighbor(j) => Some(j),
            _ => None,
        }
    }
}

/// Resolves offload requests. Each target accepts at most one request, only
/// when it has no overflow of its own, and only one it can finish within `τ`
/// on spare cycles (`v·S̄ ≤ τC_j − v·S_j`). Among feasible requests the largest
/// overflow wins, ties to the lowest source. Everything refused goes to the
/// core.
///
/// `choices` must already be valid for `sizes`.
pub fn contention_resolve(topology: &EdgeTopology, sizes: &[f64], choices: &[Choice]) -> Vec<Route> {
    let n = topology.server_count();
    let overflow: Vec<f64> = (0..n).map(|i| topology.split(i, sizes[i]).1).collect();
    let mut routes: Vec<Route> = choices
        .iter()
        .map(|c| match c {
            Choice::NoOp => Route::Local,
            Choice::Core => Route::Core,
            Choice::Neighbor(j) => Route::Rejected(*j),
        })
        .collect();
    for j in 0..n {
        if overflow[j] > 0.0 {
            continue;
        }
        let spare = topology.tau * topology.capacity(j) - topology.cycles_per_bit * sizes[j];
        let mut best: Option<usize> = None;
        for i in 0..n {
            if routes[i] != Route::Rejected(j) || topology.cycles_per_bit * overflow[i] > spare {
                continue;
            }
            if best.is_none_or(|b| overflow[i] > overflow[b]) {
                best = Some(i);
            }
        }
        if let Some(i) = best {
            routes[i] = Route::Neighbor(j);
        }
    }
    routes
}

/// Latency of every server given resolved routes.
pub fn route_latencies(topology: &EdgeTopology, sizes: &[f64], routes: &[Route]) -> Vec<f64> {
    let (tau, v) = (topology.tau, topology.cycles_per_bit);
    routes
        .iter()
        .enumerate()
        .map(|(i, route)| {
            let over = topology.split(i, sizes[i]).1;
            match *route {
                Route::Local => latency_local(sizes[i], topology.capacity(i), v),
                Route::Core | Route::Rejected(_) => latency_core(over, tau, topology.core_rate),
                Route::Neighbor(j) => {
                    let rate = topology.link_rate(i, j).expect("accepted route follows a link");
                    latency_offload(over, tau, rate, topology.capacity(j), v)
                }
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_examples() {
        assert_eq!(split_task(25.0, 1000.0, 0.1, 10.0), (10.0, 15.0));
        assert_eq!(split_task(10.0, 1000.0, 0.1, 10.0), (10.0, 0.0));
        assert_eq!(split_task(0.0, 1000.0, 0.1, 10.0), (0.0, 0.0));
    }

    #[test]
    fn local_examples() {
        assert!((latency_local(8.0, 1000.0, 10.0) - 0.08).abs() < 1e-15);
        assert!((latency_local(10.0, 1000.0, 10.0) - 0.1).abs() < 1e-15);
        assert_eq!(latency_local(0.0, 1000.0, 10.0), 0.0);
    }

    #[test]
    fn core_examples() {
        assert!((latency_core(15.0, 0.1, 150.0) - 0.2).abs() < 1e-15);
        assert_eq!(latency_core(0.0, 0.1, 150.0), 0.1);
        let slow = latency_core(15.0, 0.1, 150.0) - 0.1;
        let fast = latency_core(15.0, 0.1, 300.0) - 0.1;
        assert!((slow - 2.0 * fast).abs() < 1e-15);
    }

    #[test]
    fn offload_examples() {
        assert!((latency_offload(15.0, 0.1, 150.0, 3000.0, 10.0) - 0.25).abs() < 1e-15);
        assert_eq!(latency_offload(0.0, 0.1, 150.0, 3000.0, 10.0), 0.1);
        let huge = latency_offload(15.0, 0.1, 150.0, 1e15, 10.0);
        assert!((huge - 0.2).abs() < 1e-12);
    }
}
