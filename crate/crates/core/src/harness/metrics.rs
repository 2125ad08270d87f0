use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One slicing step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlicingRecord {
    pub step: u64,
    pub k: Vec<f64>,
    pub c: Vec<f64>,
    #[serde(rename = "U")]
    pub utility: f64,
    pub mode: String,
    pub policy: String,
    #[serde(rename = "B")]
    pub budget: f64,
    /// Utility of the noiseless policy action at this step (analytic mode).
    #[serde(rename = "U_policy", default, skip_serializing_if = "Option::is_none")]
    pub policy_utility: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub critic_loss: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub actor_loss: Option<f64>,
}

/// One offloading slot. Actions use 0 for no-op, −1 for the core and the
/// 1-based server id for a neighbour.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MecRecord {
    pub slot: u64,
    pub action: Vec<i64>,
    #[serde(rename = "L")]
    pub latencies: Vec<f64>,
    #[serde(rename = "L_max")]
    pub l_max: f64,
    pub policy: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MetricsRecord {
    Slicing(SlicingRecord),
    Mec(MecRecord),
}

impl MetricsRecord {
    pub fn index(&self) -> u64 {
        match self {
            MetricsRecord::Slicing(r) => r.step,
            MetricsRecord::Mec(r) => r.slot,
        }
    }

    /// `U` for slicing, `L(t)` for offloading.
    pub fn objective(&self) -> f64 {
        match self {
            MetricsRecord::Slicing(r) => r.utility,
            MetricsRecord::Mec(r) => r.l_max,
        }
    }

    pub fn policy(&self) -> &str {
        match self {
            MetricsRecord::Slicing(r) => &r.policy,
            MetricsRecord::Mec(r) => &r.policy,
        }
    }
}

pub fn to_jsonl(records: &[MetricsRecord]) -> Result<String> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn write_metrics(path: &Path, records: &[MetricsRecord]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn parse_metrics(text: &str) -> Result<Vec<MetricsRecord>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(Error::from))
        .collect()
}

pub fn read_metrics(path: &Path) -> Result<Vec<MetricsRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}
