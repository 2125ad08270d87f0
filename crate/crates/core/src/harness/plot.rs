use std::path::Path;
use std::str::FromStr;

use super::metrics::{MecRecord, MetricsRecord, SlicingRecord};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    /// `k_i / B` per step.
    AllocationProportions,
    /// Slice scores and utility per step.
    ScoresAndUtility,
    /// `L(t)` and per-server latencies per slot.
    LatencyCurve,
    /// `L(t)` per slot, one column per ε.
    EpsilonSweep,
}

impl PlotKind {
    pub const ALL: [PlotKind; 4] = [
        PlotKind::AllocationProportions,
        PlotKind::ScoresAndUtility,
        PlotKind::LatencyCurve,
        PlotKind::EpsilonSweep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PlotKind::AllocationProportions => "allocation-proportions",
            PlotKind::ScoresAndUtility => "scores-and-utility",
            PlotKind::LatencyCurve => "latency-curve",
            PlotKind::EpsilonSweep => "epsilon-sweep",
        }
    }
}

impl FromStr for PlotKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PlotKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown plot kind {s:?}")))
    }
}

fn slicing(records: &[MetricsRecord]) -> Result<Vec<&SlicingRecord>> {
    records
        .iter()
        .map(|r| match r {
            MetricsRecord::Slicing(s) => Ok(s),
            MetricsRecord::Mec(_) => Err(Error::InvalidArgument("expected slicing metrics".into())),
        })
        .collect()
}

fn mec(records: &[MetricsRecord]) -> Result<Vec<&MecRecord>> {
    records
        .iter()
        .map(|r| match r {
            MetricsRecord::Mec(m) => Ok(m),
            MetricsRecord::Slicing(_) => Err(Error::InvalidArgument("expected offloading metrics".into())),
        })
        .collect()
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn numbered(prefix: &str, n: usize) -> impl Iterator<Item = String> + '_ {
    (1..=n).map(move |i| format!("{prefix}_{i}"))
}

/// Builds the CSV for `kind`. Empty input yields a header-only file.
pub fn emit_plot_data(records: &[MetricsRecord], kind: PlotKind) -> Result<String> {
    let mut rows: Vec<Vec<String>> = Vec::new();
    match kind {
        PlotKind::AllocationProportions => {
            let recs = slicing(records)?;
            let n = recs.first().map_or(0, |r| r.k.len());
            rows.push(std::iter::once("step".to_string()).chain(numbered("k", n)).collect());
            for r in recs {
                let mut row = vec![r.step.to_string()];
                row.extend(r.k.iter().map(|k| num(k / r.budget)));
                rows.push(row);
            }
        }
        PlotKind::ScoresAndUtility => {
            let recs = slicing(records)?;
            let n = recs.first().map_or(0, |r| r.c.len());
            let mut header: Vec<String> = std::iter::once("step".to_string()).chain(numbered("c", n)).collect();
            if n > 0 {
                header.push("U".into());
            }
            rows.push(header);
            for r in recs {
                let mut row = vec![r.step.to_string()];
                row.extend(r.c.iter().map(|&c| num(c)));
                row.push(num(r.utility));
                rows.push(row);
            }
        }
        PlotKind::LatencyCurve => {
            let recs = mec(records)?;
            let n = recs.first().map_or(0, |r| r.latencies.len());
            let mut header = vec!["slot".to_string()];
            if n > 0 {
                header.push("L_max".into());
            }
            header.extend(numbered("L", n));
            rows.push(header);
            for r in recs {
                let mut row = vec![r.slot.to_string(), num(r.l_max)];
                row.extend(r.latencies.iter().map(|&l| num(l)));
                rows.push(row);
            }
        }
        PlotKind::EpsilonSweep => {
            let recs = mec(records)?;
            let mut labels: Vec<String> = Vec::new();
            let mut series: Vec<Vec<&MecRecord>> = Vec::new();
            for r in recs {
                let label = match r.epsilon {
                    Some(e) => format!("eps_{e}"),
                    None => r.policy.clone(),
                };
                match labels.iter().position(|l| *l == label) {
                    Some(i) => series[i].push(r),
                    None => {
                        labels.push(label);
                        series.push(vec![r]);
                    }
                }
            }
            rows.push(std::iter::once("slot".to_string()).chain(labels.iter().cloned()).collect());
            let len = series.iter().map(Vec::len).max().unwrap_or(0);
            for i in 0..len {
                let slot = series.iter().find_map(|s| s.get(i)).map_or(0, |r| r.slot);
                let mut row = vec![slot.to_string()];
                row.extend(series.iter().map(|s| s.get(i).map_or(String::new(), |r| num(r.l_max))));
                rows.push(row);
            }
        }
    }
    let mut w = csv::WriterBuilder::new().flexible(false).from_writer(Vec::new());
    for row in rows {
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("CSV of ASCII numbers"))
}

pub fn write_plot_data(records: &[MetricsRecord], kind: PlotKind, path: &Path) -> Result<()> {
    let text = emit_plot_data(records, kind)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
