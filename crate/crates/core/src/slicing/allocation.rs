use rand::Rng;

use super::SliceConfig;
use crate::error::{ensure_dim, Error, Result};

/// Per-slice bandwidth shares.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation(Vec<f64>);

impl Allocation {
    /// Wraps `k` after checking the per-slice bounds and the total budget,
    /// allowing `tol` of slack on each comparison.
    pub fn checked(k: Vec<f64>, config: &SliceConfig, tol: f64) -> Result<Self> {
        let a = Allocation(k);
        a.verify(config, tol)?;
        Ok(a)
    }

    pub fn verify(&self, config: &SliceConfig, tol: f64) -> Result<()> {
        ensure_dim("allocation", config.slice_count(), self.0.len())?;
        for (i, &k) in self.0.iter().enumerate() {
            if !k.is_finite() || k < config.k_min[i] - tol || k > config.k_max[i] + tol {
                return Err(Error::Infeasible(format!(
                    "slice {i} gets {k}, bounds [{}, {}]",
                    config.k_min[i], config.k_max[i]
                )));
            }
        }
        let total: f64 = self.0.iter().sum();
        if total > config.budget + tol {
            return Err(Error::Infeasible(format!("total {total} exceeds budget {}", config.budget)));
        }
        Ok(())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }
}

impl std::ops::Deref for Allocation {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Trims floating-point overshoot of the budget from the largest share.
fn trim_to_budget(k: &mut [f64], config: &SliceConfig) {
    let total: f64 = k.iter().sum();
    let excess = total - config.budget;
    if excess > 0.0 {
        let (idx, _) = k
            .iter()
            .enumerate()
            .fold((0, f64::MIN), |best, (i, &v)| if v > best.1 { (i, v) } else { best });
        k[idx] = (k[idx] - excess).max(config.k_min[idx]);
    }
}

/// Maps an action in `[-1, 1]^I` to bandwidth:
/// `k_i = min(k_max,i, k_min,i + (B − Σ k_min) · (a_i + 1) / Σ (a_j + 1))`.
///
/// Budget freed by the `k_max` cap is left unspent. When every action is −1
/// the residual budget is split equally.
pub fn map_action(action: &[f64], config: &SliceConfig) -> Result<Allocation> {
    ensure_dim("slicing action", config.slice_count(), action.len())?;
    if let Some(bad) = action.iter().find(|a| !(-1.0..=1.0).contains(*a)) {
        return Err(Error::InvalidAction(format!("action component {bad} outside [-1, 1]")));
    }
    let residual = config.budget - config.k_min.iter().sum::<f64>();
    let denom: f64 = action.iter().map(|a| a + 1.0).sum();
    let n = action.len() as f64;
    let mut k: Vec<f64> = action
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let weight = if denom > 0.0 { (a + 1.0) / denom } else { 1.0 / n };
            config.k_max[i].min(config.k_min[i] + residual * weight)
        })
        .collect();
    trim_to_budget(&mut k, config);
    Ok(Allocation(k))
}

/// Even split `B / I`.
pub fn sra(config: &SliceConfig) -> Result<Allocation> {
    let share = config.budget / config.slice_count() as f64;
    for i in 0..config.slice_count() {
        if share < config.k_min[i] || share > config.k_max[i] {
            return Err(Error::Infeasible(format!(
                "even share {share} violates slice {i} bounds [{}, {}]",
                config.k_min[i], config.k_max[i]
            )));
        }
    }
    Ok(Allocation(vec![share; config.slice_count()]))
}

/// Utility-maximising allocation under the analytic score: a common water
/// level `ν` with `k_i = clamp(min(ν, d_i), k_min,i, k_max,i)`, raised until
/// the budget is exhausted or every demand is met.
pub fn water_fill_optimal(demands: &[f64], config: &SliceConfig) -> Result<Allocation> {
    ensure_dim("demands", config.slice_count(), demands.len())?;
    if demands.iter().any(|&d| !(d > 0.0)) {
        return Err(Error::InvalidArgument(format!("demands must be positive, got {demands:?}")));
    }
    config.check_bounds()?;
    let level = |nu: f64| -> Vec<f64> {
        demands
            .iter()
            .enumerate()
            .map(|(i, &d)| nu.min(d).clamp(config.k_min[i], config.k_max[i]))
            .collect()
    };
    let total = |k: &[f64]| k.iter().sum::<f64>();

    let top = demands
        .iter()
        .chain(config.k_max.iter())
        .fold(0.0f64, |m, &v| m.max(v));
    let saturated = level(top);
    if total(&saturated) <= config.budget {
        return Ok(Allocation(saturated));
    }
    let (mut lo, mut hi) = (0.0, top);
    while hi - lo > 1e-13 * top.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if total(&level(mid)) <= config.budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut k = level(lo);
    trim_to_budget(&mut k, config);
    Ok(Allocation(k))
}

/// A random allocation satisfying the bounds and the budget.
pub fn random_feasible<R: Rng + ?Sized>(config: &SliceConfig, rng: &mut R) -> Allocation {
    let n = config.slice_count();
    let residual = config.budget - config.k_min.iter().sum::<f64>();
    let spend = residual * rng.random::<f64>();
    let weights: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 1e-12).collect();
    let wsum: f64 = weights.iter().sum();
    let mut k: Vec<f64> = (0..n)
        .map(|i| config.k_max[i].min(config.k_min[i] + spend * weights[i] / wsum))
        .collect();
    trim_to_budget(&mut k, config);
    Allocation(k)
}
