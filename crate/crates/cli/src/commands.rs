use std::io::Write;
use std::path::{Path, PathBuf};

use fedpt_core::harness::{sweep, write_metrics_csv, ExperimentSummary, SweepTable};
use fedpt_core::objectives::two_client_symmetric;
use fedpt_core::{
    fixed_point_probe, run_experiment, step_size_budget, AdamHyper, AlgorithmKind, ExperimentConfig, ProbeReport,
    RoundHyper, StepSizeBudget,
};
use serde::Serialize;

use crate::config::SweepSpec;
use crate::output::{ensure_dir, write_atomic, write_json};
use crate::CliError;

fn say(out: &mut dyn Write, line: std::fmt::Arguments<'_>) -> Result<(), CliError> {
    writeln!(out, "{line}").map_err(|e| CliError::Runtime(format!("writing to stdout: {e}")))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x}"))
}

#[derive(Debug, Serialize)]
struct RunRecord<'a> {
    config: &'a ExperimentConfig,
    summary: ExperimentSummary,
}

/// Runs one experiment; writes `metrics.csv` and `summary.json` into `dir`.
pub fn cmd_run(config: &ExperimentConfig, dir: &Path, out: &mut dyn Write) -> Result<Vec<PathBuf>, CliError> {
    ensure_dir(dir)?;
    let outcome = run_experiment(config)?;
    let rows = outcome.rows();
    let csv = write_atomic(dir, "metrics.csv", |w| Ok(write_metrics_csv(&rows, w)?))?;
    let summary = outcome.summary();
    say(
        out,
        format_args!(
            "{}: trials={} rounds_to_target={:?} median={} final_loss={:?}",
            config.algorithm,
            summary.trials,
            summary.rounds_to_target,
            fmt_opt(summary.rounds_median),
            summary.final_loss
        ),
    )?;
    let json = write_json(dir, "summary.json", &RunRecord { config, summary })?;
    Ok(vec![csv, json])
}

/// Runs a sweep; writes `sweep.csv` and `sweep.json` into `dir`.
pub fn cmd_sweep(spec: &SweepSpec, dir: &Path, out: &mut dyn Write) -> Result<Vec<PathBuf>, CliError> {
    ensure_dir(dir)?;
    let table: SweepTable = sweep(&spec.base, spec.axis, &spec.values)?;
    for row in &table.rows {
        say(
            out,
            format_args!(
                "{} {}={}: reached {}/{} median={} mean={}",
                table.algorithm,
                table.axis.name(),
                row.value,
                row.reached,
                row.trials,
                fmt_opt(row.rounds_median),
                fmt_opt(row.rounds_mean)
            ),
        )?;
    }
    let csv = write_atomic(dir, "sweep.csv", |w| Ok(table.write_csv(w)?))?;
    let json = write_json(dir, "sweep.json", &table)?;
    Ok(vec![csv, json])
}

/// Settings of the fixed-point probe.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ProbeSettings {
    pub rounds: usize,
    pub local_steps: usize,
    pub eta_l: f64,
    pub eta_g: f64,
    pub alpha_weight: f64,
    pub adam: AdamHyper,
}

impl Default for ProbeSettings {
    fn default() -> Self {
        ProbeSettings {
            rounds: 100,
            local_steps: 3,
            eta_l: 1e-3,
            eta_g: 1.0,
            alpha_weight: 0.5,
            adam: AdamHyper::default(),
        }
    }
}

#[derive(Debug, Serialize)]
struct ProbeRecord {
    suite: &'static str,
    settings: ProbeSettings,
    reports: Vec<ProbeReport>,
}

const ALL_KINDS: [AlgorithmKind; 6] = [
    AlgorithmKind::FAdamGT,
    AlgorithmKind::FAdamET,
    AlgorithmKind::Scaffold,
    AlgorithmKind::LocalAdam,
    AlgorithmKind::FedLada,
    AlgorithmKind::FedAvg,
];

/// Fixed-point probe of every algorithm on the two-client quadratic.
pub fn cmd_probe(settings: &ProbeSettings, dir: &Path, out: &mut dyn Write) -> Result<Vec<ProbeReport>, CliError> {
    ensure_dir(dir)?;
    let suite = two_client_symmetric();
    let hyper = RoundHyper {
        participants: 2,
        trackers: 2,
        local_steps: settings.local_steps,
        eta_l: settings.eta_l,
        eta_g: settings.eta_g,
        adam: settings.adam,
        alpha_weight: settings.alpha_weight,
    };
    let mut reports = Vec::with_capacity(ALL_KINDS.len());
    for kind in ALL_KINDS {
        let r = fixed_point_probe(kind, &suite, settings.rounds, &hyper)?;
        say(
            out,
            format_args!(
                "{:<10} drift={:.6e} global={:.6e} local={:.6e}",
                kind.name(),
                r.max_drift(),
                r.global_drift,
                r.local_drift
            ),
        )?;
        reports.push(r);
    }
    write_json(
        dir,
        "probe.json",
        &ProbeRecord {
            suite: "two_client_symmetric",
            settings: *settings,
            reports: reports.clone(),
        },
    )?;
    Ok(reports)
}

/// Inputs of the step-size budget.
#[derive(Debug, Clone, Copy)]
pub struct BudgetInputs {
    pub g: f64,
    pub l: f64,
    pub k: usize,
    pub t: usize,
    pub s: usize,
    pub beta1: f64,
    pub eps: f64,
}

/// Prints the three step-size caps and writes `budget.json`.
pub fn cmd_budget(inputs: &BudgetInputs, dir: &Path, out: &mut dyn Write) -> Result<StepSizeBudget, CliError> {
    let b = step_size_budget(
        inputs.g,
        inputs.l,
        inputs.k,
        inputs.t,
        inputs.s,
        inputs.beta1,
        inputs.eps,
    )
    .map_err(|e| CliError::Config(e.to_string()))?;
    ensure_dir(dir)?;
    say(out, format_args!("combined_cap = {:.6e}", b.combined_cap))?;
    say(out, format_args!("local_cap_gt = {:.6e}", b.local_cap_gt))?;
    say(out, format_args!("local_cap_et = {:.6e}", b.local_cap_et))?;
    write_json(dir, "budget.json", &b)?;
    Ok(b)
}
