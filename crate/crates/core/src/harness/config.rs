use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dqn::DqnConfig;
use crate::error::{Error, Result};
use crate::mec::MecConfig;
use crate::slicing::{SliceConfig, SliceMode};
use crate::td3::Td3Config;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    SlicingAnalytic,
    SlicingEmulated,
    Mec,
}

impl Scenario {
    pub fn slice_mode(self) -> Option<SliceMode> {
        match self {
            Scenario::SlicingAnalytic => Some(SliceMode::Analytic),
            Scenario::SlicingEmulated => Some(SliceMode::Emulated),
            Scenario::Mec => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Policy {
    Td3,
    Dqn,
    Sra,
    Rra,
    Optimal,
}

impl Policy {
    pub fn as_str(self) -> &'static str {
        match self {
            Policy::Td3 => "td3",
            Policy::Dqn => "dqn",
            Policy::Sra => "sra",
            Policy::Rra => "rra",
            Policy::Optimal => "optimal",
        }
    }
}

/// One experiment. Omitted sections take the scenario's defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub policy: Policy,
    #[serde(default)]
    pub seed: u64,
    /// `T`; 8000 for slicing, 5000 for offloading.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_steps: Option<u64>,
    /// `T₁`; 40 for slicing, 500 for offloading.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exploration_steps: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slicing: Option<SliceConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mec: Option<MecConfig>,
    #[serde(default)]
    pub td3: Td3Config,
    #[serde(default)]
    pub dqn: DqnConfig,
}

impl ExperimentConfig {
    pub fn new(scenario: Scenario, policy: Policy, seed: u64) -> Self {
        Self {
            scenario,
            policy,
            seed,
            total_steps: None,
            exploration_steps: None,
            output: None,
            slicing: None,
            mec: None,
            td3: Td3Config::default(),
            dqn: DqnConfig::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("bad experiment config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let cfg = Self::from_json(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn total_steps(&self) -> u64 {
        self.total_steps.unwrap_or(match self.scenario {
            Scenario::Mec => 5000,
            _ => 8000,
        })
    }

    pub fn exploration_steps(&self) -> u64 {
        self.exploration_steps.unwrap_or(match self.scenario {
            Scenario::Mec => 500,
            _ => 40,
        })
    }

    pub fn slice_config(&self) -> SliceConfig {
        self.slicing.clone().unwrap_or_else(|| match self.scenario {
            Scenario::SlicingEmulated => SliceConfig::emulated_default(),
            _ => SliceConfig::analytic_default(),
        })
    }

    pub fn mec_config(&self) -> MecConfig {
        self.mec.clone().unwrap_or_default()
    }

    /// Output path, falling back to `<policy>-<scenario>-seed<N>.jsonl`.
    pub fn output_path(&self) -> PathBuf {
        self.output.clone().unwrap_or_else(|| {
            let scenario = serde_json::to_value(self.scenario).expect("enum serialises");
            PathBuf::from(format!(
                "{}-{}-seed{}.jsonl",
                self.policy.as_str(),
                scenario.as_str().unwrap_or("run"),
                self.seed
            ))
        })
    }

    pub fn validate(&self) -> Result<()> {
        let compatible = match self.scenario {
            Scenario::SlicingAnalytic => matches!(self.policy, Policy::Td3 | Policy::Sra | Policy::Optimal),
            Scenario::SlicingEmulated => matches!(self.policy, Policy::Td3 | Policy::Sra),
            Scenario::Mec => matches!(self.policy, Policy::Dqn | Policy::Rra | Policy::Optimal),
        };
        if !compatible {
            return Err(Error::Config(format!(
                "policy {} does not apply to scenario {:?}",
                self.policy.as_str(),
                self.scenario
            )));
        }
        let (t, t1) = (self.total_steps(), self.exploration_steps());
        if t == 0 || t1 >= t {
            return Err(Error::Config(format!("need 0 <= T1 < T, got T1 = {t1}, T = {t}")));
        }
        match self.scenario.slice_mode() {
            Some(mode) => self.slice_config().validate(mode)?,
            None => {
                self.mec_config().topology()?;
            }
        }
        match self.policy {
            Policy::Td3 => self.td3.validate(),
            Policy::Dqn => self.dqn.validate(),
            _ => Ok(()),
        }
    }
}
