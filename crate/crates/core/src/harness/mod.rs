//! Experiment orchestration: trials, early stopping, communication
//! accounting, metric rows, and parameter sweeps.

mod config;
mod ledger;
mod metrics;
mod run;
mod sweep;
mod target;

pub use config::{ExperimentConfig, SuiteConfig, Target, TargetMetric};
pub use ledger::{unit_rule, CommLedger};
pub use metrics::{write_metrics_csv, MetricsRow, METRICS_COLUMNS};
pub use run::{
    run_experiment, run_experiment_on, run_trial, ExperimentOutcome, ExperimentSummary, Reference, TrialOutcome,
};
pub use sweep::{sweep, SweepAxis, SweepRow, SweepTable};
pub use target::{rounds_to_target, smoothed, Threshold};
