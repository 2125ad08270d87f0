use std::fmt::Write as _;

use super::metrics::MetricsRecord;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PolicySummary {
    pub label: String,
    pub policy: String,
    pub steps: usize,
    pub mean: f64,
    /// Mean objective over the final window.
    pub window_mean: f64,
    /// `window_mean` over the last input's `window_mean`.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub window: usize,
    pub rows: Vec<PolicySummary>,
    /// Step index and every input's objective, over the shared prefix.
    pub aligned: Vec<(u64, Vec<f64>)>,
}

/// Mean objective over records whose step index lies in `lo..=hi`.
pub fn mean_over(records: &[MetricsRecord], lo: u64, hi: u64) -> Option<f64> {
    let vals: Vec<f64> = records
        .iter()
        .filter(|r| (lo..=hi).contains(&r.index()))
        .map(MetricsRecord::objective)
        .collect();
    (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

/// Summarises labelled metric series. The final window defaults to the last
/// 5% of the shortest series (at least one step).
pub fn compare(inputs: &[(String, Vec<MetricsRecord>)], window: Option<usize>) -> Result<Comparison> {
    if inputs.is_empty() {
        return Err(Error::InvalidArgument("nothing to compare".into()));
    }
    if let Some((label, _)) = inputs.iter().find(|(_, r)| r.is_empty()) {
        return Err(Error::InvalidArgument(format!("{label} holds no records")));
    }
    let slicing = matches!(inputs[0].1[0], MetricsRecord::Slicing(_));
    if inputs
        .iter()
        .any(|(_, r)| r.iter().any(|x| matches!(x, MetricsRecord::Slicing(_)) != slicing))
    {
        return Err(Error::InvalidArgument("cannot compare slicing and offloading metrics".into()));
    }
    let shortest = inputs.iter().map(|(_, r)| r.len()).min().expect("non-empty");
    let window = window
        .unwrap_or_else(|| (shortest as f64 * 0.05).ceil() as usize)
        .clamp(1, shortest);
    let mut rows: Vec<PolicySummary> = inputs
        .iter()
        .map(|(label, recs)| PolicySummary {
            label: label.clone(),
            policy: recs[0].policy().to_string(),
            steps: recs.len(),
            mean: mean(recs.iter().map(MetricsRecord::objective)),
            window_mean: mean(recs[recs.len() - window..].iter().map(MetricsRecord::objective)),
            ratio: 1.0,
        })
        .collect();
    let reference = rows.last().expect("non-empty").window_mean;
    for r in &mut rows {
        r.ratio = r.window_mean / reference;
    }
    let aligned = (0..shortest)
        .map(|i| {
            (
                inputs[0].1[i].index(),
                inputs.iter().map(|(_, r)| r[i].objective()).collect(),
            )
        })
        .collect();
    Ok(Comparison { window, rows, aligned })
}

impl Comparison {
    pub fn to_table(&self) -> String {
        let mut out = format!("final window: last {} steps; ratio relative to the last input\n", self.window);
        let _ = writeln!(
            out,
            "{:<32} {:<8} {:>7} {:>12} {:>12} {:>9}",
            "input", "policy", "steps", "mean", "window", "ratio"
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<32} {:<8} {:>7} {:>12.6} {:>12.6} {:>9.4}",
                r.label, r.policy, r.steps, r.mean, r.window_mean, r.ratio
            );
        }
        out
    }
}
