//! Experiment runner: configuration, training loops, metrics, comparison and
//! plot export.
//!
//! A run is step-level: each of the `T` steps is one environment step. The
//! first `T₁` steps act at random, the rest follow the learned policy with
//! exploration noise.

mod compare;
mod config;
mod metrics;
mod oracle;
mod plot;
mod run;

pub use compare::{compare, mean_over, Comparison, PolicySummary};
pub use config::{ExperimentConfig, Policy, Scenario};
pub use metrics::{parse_metrics, read_metrics, to_jsonl, write_metrics, MecRecord, MetricsRecord, SlicingRecord};
pub use oracle::{oracle_report, MecOracle, OracleReport, PhaseOracle};
pub use plot::{emit_plot_data, write_plot_data, PlotKind};
pub use run::{evaluate_mec, run, run_experiment, sweep_epsilon, MecEvaluation, RunOutput};
