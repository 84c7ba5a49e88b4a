use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, SuiteConfig};
use super::run::{censored_median, mean_sd, run_experiment};
use crate::error::{FedError, Result};

/// Parameter varied by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    DirichletAlpha,
    #[serde(rename = "K")]
    K,
    #[serde(rename = "Y")]
    Y,
    Heterogeneity,
}

impl FromStr for SweepAxis {
    type Err = FedError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dirichlet_alpha" => Ok(SweepAxis::DirichletAlpha),
            "K" | "k" => Ok(SweepAxis::K),
            "Y" | "y" => Ok(SweepAxis::Y),
            "heterogeneity" => Ok(SweepAxis::Heterogeneity),
            other => Err(FedError::config(format!(
                "unknown sweep axis '{other}' (expected dirichlet_alpha, K, Y or heterogeneity)"
            ))),
        }
    }
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::DirichletAlpha => "dirichlet_alpha",
            SweepAxis::K => "K",
            SweepAxis::Y => "Y",
            SweepAxis::Heterogeneity => "heterogeneity",
        }
    }

    fn count(value: f64, axis: &str) -> Result<usize> {
        if value >= 0.0 && value.fract() == 0.0 && value.is_finite() {
            Ok(value as usize)
        } else {
            Err(FedError::config(format!(
                "{axis} values must be whole numbers, got {value}"
            )))
        }
    }

    /// `base` with this axis set to `value`.
    pub fn apply(self, base: &ExperimentConfig, value: f64) -> Result<ExperimentConfig> {
        let mut cfg = base.clone();
        match (self, &mut cfg.suite) {
            (SweepAxis::K, _) => cfg.k = Self::count(value, "K")?,
            (SweepAxis::Y, _) => cfg.y = Self::count(value, "Y")?,
            (SweepAxis::DirichletAlpha, SuiteConfig::Logistic { dirichlet_alpha, .. }) => *dirichlet_alpha = value,
            (SweepAxis::Heterogeneity, SuiteConfig::Quadratic { heterogeneity, .. }) => *heterogeneity = value,
            (axis, _) => {
                return Err(FedError::config(format!(
                    "axis {} does not apply to this suite kind",
                    axis.name()
                )))
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub trials: usize,
    pub reached: usize,
    pub rounds_to_target: Vec<Option<usize>>,
    pub rounds_mean: Option<f64>,
    pub rounds_sd: Option<f64>,
    pub rounds_median: Option<f64>,
    pub comm_to_target_mean: Option<f64>,
    pub comm_to_target_sd: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub axis: SweepAxis,
    pub algorithm: crate::fed_algorithms::AlgorithmKind,
    pub rows: Vec<SweepRow>,
}

/// Runs `base` once per value of `axis` and tabulates rounds and
/// communication to target over the trials.
pub fn sweep(base: &ExperimentConfig, axis: SweepAxis, values: &[f64]) -> Result<SweepTable> {
    if values.is_empty() {
        return Err(FedError::config("sweep needs at least one value"));
    }
    if base.target.is_none() {
        return Err(FedError::config("sweep needs a target"));
    }
    let configs = values
        .iter()
        .map(|&v| axis.apply(base, v))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::with_capacity(values.len());
    for (&value, cfg) in values.iter().zip(&configs) {
        let outcome = run_experiment(cfg)?;
        let rounds = outcome.rounds_to_target();
        let reached: Vec<f64> = rounds.iter().flatten().map(|&r| r as f64).collect();
        let comm: Vec<f64> = outcome.trials.iter().filter_map(|t| t.comm_to_target).collect();
        let (rounds_mean, rounds_sd) = mean_sd(&reached);
        let (comm_mean, comm_sd) = mean_sd(&comm);
        rows.push(SweepRow {
            value,
            trials: rounds.len(),
            reached: reached.len(),
            rounds_median: censored_median(&rounds),
            rounds_to_target: rounds,
            rounds_mean,
            rounds_sd,
            comm_to_target_mean: comm_mean,
            comm_to_target_sd: comm_sd,
        });
    }
    Ok(SweepTable {
        axis,
        algorithm: base.algorithm,
        rows,
    })
}

impl SweepTable {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let io = |e: csv::Error| FedError::protocol(format!("writing sweep table: {e}"));
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            self.axis.name(),
            "trials",
            "reached",
            "rounds_mean",
            "rounds_sd",
            "rounds_median",
            "comm_to_target_mean",
            "comm_to_target_sd",
        ])
        .map_err(io)?;
        for r in &self.rows {
            w.write_record([
                r.value.to_string(),
                r.trials.to_string(),
                r.reached.to_string(),
                opt(r.rounds_mean),
                opt(r.rounds_sd),
                opt(r.rounds_median),
                opt(r.comm_to_target_mean),
                opt(r.comm_to_target_sd),
            ])
            .map_err(io)?;
        }
        w.flush()
            .map_err(|e| FedError::protocol(format!("writing sweep table: {e}")))?;
        Ok(())
    }
}
