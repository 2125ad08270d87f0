use crate::error::{ensure_dim, Error, Result};

/// Fixed exponent applied to every slice score.
pub const SCORE_EXPONENT: f64 = 1.1;

/// Measured inputs to the emulated score of every slice for one step.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceScoreInputs {
    /// Requests completed this step.
    pub completed: Vec<f64>,
    /// Mean latency of this step's completions.
    pub latency: Vec<f64>,
    /// Video completion flag (0 or 1; always 0 for other services).
    pub video_flag: Vec<u8>,
}

/// `c_i = (min(k_i, d_i) / d_i)^1.1 / c_i,0`.
pub fn score_analytic(k: &[f64], demands: &[f64], ideal: &[f64]) -> Result<Vec<f64>> {
    ensure_dim("demands", k.len(), demands.len())?;
    ensure_dim("ideal scores", k.len(), ideal.len())?;
    if let Some(d) = demands.iter().find(|&&d| !(d > 0.0)) {
        return Err(Error::InvalidArgument(format!("demand {d} must be positive")));
    }
    Ok(k.iter()
        .zip(demands)
        .zip(ideal)
        .map(|((&k, &d), &c0)| (k.min(d) / d).powf(SCORE_EXPONENT) / c0)
        .collect())
}

/// `c_i = (r_i + l_i,0 / l_i)^1.1 / c_i,0 + f_i`.
pub fn score_emulated(
    inputs: &SliceScoreInputs,
    latency_weights: &[f64],
    ideal: &[f64],
) -> Result<Vec<f64>> {
    let n = inputs.completed.len();
    ensure_dim("latencies", n, inputs.latency.len())?;
    ensure_dim("video flags", n, inputs.video_flag.len())?;
    ensure_dim("latency weights", n, latency_weights.len())?;
    ensure_dim("ideal scores", n, ideal.len())?;
    (0..n)
        .map(|i| {
            let (r, l, f) = (inputs.completed[i], inputs.latency[i], inputs.video_flag[i]);
            if !(r >= 0.0) || !(l > 0.0) || f > 1 {
                return Err(Error::InvalidArgument(format!(
                    "slice {i}: completed {r}, latency {l}, flag {f}"
                )));
            }
            Ok((r + latency_weights[i] / l).powf(SCORE_EXPONENT) / ideal[i] + f as f64)
        })
        .collect()
}

/// Product of slice scores. `degenerate` marks a non-positive factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Utility {
    pub value: f64,
    pub degenerate: bool,
}

pub fn utility(scores: &[f64]) -> Utility {
    Utility {
        value: scores.iter().product(),
        degenerate: scores.iter().any(|&c| !(c > 0.0)),
    }
}
