//! Argument parsing and subcommand dispatch for the `fedpt` binary.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use fedpt_core::AdamHyper;

use crate::commands::{cmd_budget, cmd_probe, cmd_run, cmd_sweep, BudgetInputs, ProbeSettings};
use crate::config::{parse_config, parse_sweep};
use crate::CliError;

/// Federated Adam with parameter tracking: simulator front end.
///
/// Exit codes: 0 success, 1 invalid invocation or config, 2 runtime failure.
/// Errors go to stderr as `error[config]: ...` or `error[runtime]: ...`.
#[derive(Debug, Parser)]
#[command(name = "fedpt", version)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one experiment: writes metrics.csv and summary.json.
    Run {
        /// Experiment TOML file.
        config: PathBuf,
        /// Overrides as key=value, dotted for nested keys (suite.d=20).
        overrides: Vec<String>,
        #[arg(long, default_value = "fedpt-out")]
        out: PathBuf,
        /// Replaces master_seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run a sweep file: writes sweep.csv and sweep.json.
    Sweep {
        /// Sweep TOML file with `base`, `axis` and `values`.
        sweep: PathBuf,
        /// Overrides applied to the base experiment.
        overrides: Vec<String>,
        #[arg(long, default_value = "fedpt-out")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Fixed-point probe on the two-client quadratic: writes probe.json.
    Probe {
        #[arg(long, default_value_t = 100)]
        rounds: usize,
        #[arg(long = "K", default_value_t = 3)]
        k: usize,
        #[arg(long, default_value_t = 1e-3)]
        eta_l: f64,
        #[arg(long, default_value_t = 1.0)]
        eta_g: f64,
        #[arg(long, default_value_t = 0.5)]
        alpha_weight: f64,
        #[arg(long, default_value = "fedpt-out")]
        out: PathBuf,
    },
    /// Step-size caps for a horizon of T rounds: writes budget.json.
    Budget {
        #[arg(long = "G")]
        g: f64,
        #[arg(long = "L")]
        l: f64,
        #[arg(long = "K")]
        k: usize,
        #[arg(long = "T")]
        t: usize,
        #[arg(long = "S")]
        s: usize,
        #[arg(long, default_value_t = 0.9)]
        beta1: f64,
        #[arg(long, default_value_t = 1e-8)]
        eps: f64,
        #[arg(long, default_value = "fedpt-out")]
        out: PathBuf,
    },
}

fn with_seed(mut overrides: Vec<String>, seed: Option<u64>) -> Vec<String> {
    if let Some(s) = seed {
        overrides.push(format!("master_seed={s}"));
    }
    overrides
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Run {
            config,
            overrides,
            out: dir,
            seed,
        } => {
            let cfg = parse_config(&config, &with_seed(overrides, seed))?;
            cmd_run(&cfg, &dir, out)?;
        }
        Command::Sweep {
            sweep,
            overrides,
            out: dir,
            seed,
        } => {
            let spec = parse_sweep(&sweep, &with_seed(overrides, seed))?;
            cmd_sweep(&spec, &dir, out)?;
        }
        Command::Probe {
            rounds,
            k,
            eta_l,
            eta_g,
            alpha_weight,
            out: dir,
        } => {
            let settings = ProbeSettings {
                rounds,
                local_steps: k,
                eta_l,
                eta_g,
                alpha_weight,
                adam: AdamHyper::default(),
            };
            cmd_probe(&settings, &dir, out)?;
        }
        Command::Budget {
            g,
            l,
            k,
            t,
            s,
            beta1,
            eps,
            out: dir,
        } => {
            let inputs = BudgetInputs {
                g,
                l,
                k,
                t,
                s,
                beta1,
                eps,
            };
            cmd_budget(&inputs, &dir, out)?;
        }
    }
    out.flush()
        .map_err(|e| CliError::Runtime(format!("writing to stdout: {e}")))
}

/// Parses `args` (program name first) and executes the subcommand.
/// Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = write!(out, "{}", e.render());
            return 0;
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or_default().trim_start_matches("error: ");
            let _ = writeln!(err, "error[config]: {first}");
            return 1;
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error[{}]: {e}", e.tag());
            e.exit_code()
        }
    }
}
