use serde::Serialize;

use super::config::{ExperimentConfig, Scenario};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::mec::MecEnv;
use crate::slicing::{score_analytic, sra, utility, water_fill_optimal};

/// Optimum and even split for one demand phase.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseOracle {
    pub first_step: u64,
    pub demands: Vec<f64>,
    pub optimal: Vec<f64>,
    pub optimal_utility: f64,
    pub sra: Vec<f64>,
    pub sra_utility: f64,
    pub ratio: f64,
}

/// Exhaustive optimum for the first slot.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MecOracle {
    pub sizes: Vec<f64>,
    pub action: Vec<i64>,
    pub l_star: f64,
    pub valid_actions: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum OracleReport {
    Slicing { phases: Vec<PhaseOracle> },
    Mec(MecOracle),
}

pub fn oracle_report(config: &ExperimentConfig, exec: Execution) -> Result<OracleReport> {
    match config.scenario {
        Scenario::SlicingAnalytic => {
            let cfg = config.slice_config();
            cfg.validate(crate::slicing::SliceMode::Analytic)?;
            let even = sra(&cfg)?;
            let phases = cfg
                .demand_phases()
                .into_iter()
                .map(|(first_step, demands)| {
                    let k = water_fill_optimal(&demands, &cfg)?;
                    let u_opt = utility(&score_analytic(&k, &demands, &cfg.ideal_scores)?).value;
                    let u_sra = utility(&score_analytic(&even, &demands, &cfg.ideal_scores)?).value;
                    Ok(PhaseOracle {
                        first_step,
                        demands,
                        optimal: k.into_vec(),
                        optimal_utility: u_opt,
                        sra: even.to_vec(),
                        sra_utility: u_sra,
                        ratio: u_opt / u_sra,
                    })
                })
                .collect::<Result<_>>()?;
            Ok(OracleReport::Slicing { phases })
        }
        Scenario::SlicingEmulated => Err(Error::Config(
            "no closed-form optimum exists for emulated traffic".into(),
        )),
        Scenario::Mec => {
            let mut env = MecEnv::new(config.mec_config(), config.seed)?;
            env.reset();
            let (action, l_star) = env.optimal(exec)?;
            Ok(OracleReport::Mec(MecOracle {
                sizes: env.sizes().to_vec(),
                action: action.iter().map(|c| c.code()).collect(),
                l_star,
                valid_actions: env.valid_actions()?.len(),
            }))
        }
    }
}
