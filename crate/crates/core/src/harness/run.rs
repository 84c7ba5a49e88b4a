use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, TargetMetric};
use super::ledger::CommLedger;
use super::metrics::MetricsRow;
use super::target::{rounds_to_target, Threshold};
use crate::diagnostics::{c_total, measure_cal_e, measure_gamma, measure_xi, theoretical_rate, DriftReport, RateKind};
use crate::error::{FedError, Result};
use crate::fed_algorithms::{run_round, AlgorithmKind, RoundOutcome, ServerState};
use crate::objectives::{full_gradient, ProblemSuite};
use crate::paramvec::ParamVector;

/// Reference values computed once per experiment.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Reference {
    /// `f*` (closed form for quadratics, full-batch descent for logistic).
    pub optimum_loss: Option<f64>,
    /// Best accuracy reached by full-batch descent (logistic only).
    pub best_accuracy: Option<f64>,
}

impl Reference {
    fn compute(config: &ExperimentConfig, suite: &ProblemSuite) -> Result<Self> {
        let needs_central =
            config.diagnostics || matches!(config.target.map(|t| t.metric), Some(TargetMetric::RelativeAccuracy));
        if let Some(loss) = suite.optimum_loss() {
            return Ok(Reference {
                optimum_loss: Some(loss),
                best_accuracy: None,
            });
        }
        if !needs_central {
            return Ok(Reference::default());
        }
        let central = suite.central_reference(config.reference_iterations)?;
        Ok(Reference {
            optimum_loss: Some(central.loss),
            best_accuracy: central.best_accuracy,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub trial: usize,
    pub rows: Vec<MetricsRow>,
    pub ledger: CommLedger,
    pub rounds_to_target: Option<usize>,
    /// Cumulative per-client (population mean) units, down plus up, at the
    /// target round.
    pub comm_to_target: Option<f64>,
    pub final_x: ParamVector,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub config: ExperimentConfig,
    pub suite: ProblemSuite,
    pub reference: Reference,
    pub trials: Vec<TrialOutcome>,
}

fn threshold(config: &ExperimentConfig, reference: &Reference) -> Result<Option<Threshold>> {
    let Some(target) = config.target else {
        return Ok(None);
    };
    let value = match target.metric {
        TargetMetric::RelativeAccuracy => {
            let best = reference
                .best_accuracy
                .ok_or_else(|| FedError::config("relative accuracy target needs a logistic suite"))?;
            target.threshold * best
        }
        _ => target.threshold,
    };
    Ok(Some(Threshold::for_metric(target.metric, value)))
}

fn target_value(metric: TargetMetric, row: &MetricsRow) -> f64 {
    match metric {
        TargetMetric::Loss => row.loss,
        TargetMetric::GradNormSq => row.grad_norm_sq,
        TargetMetric::Accuracy | TargetMetric::RelativeAccuracy => row.accuracy.unwrap_or(f64::NAN),
    }
}

/// Snapshot streams for the tracking drift: estimate tracking records the
/// Adam directions, gradient tracking the exact gradients at its iterates.
struct DriftTracker {
    snapshots: Vec<Vec<ParamVector>>,
}

impl DriftTracker {
    fn new(n: usize, k: usize, d: usize) -> Self {
        DriftTracker {
            snapshots: vec![vec![ParamVector::zeros(d); k]; n],
        }
    }

    fn measure(
        &mut self,
        kind: AlgorithmKind,
        suite: &ProblemSuite,
        x_before: &ParamVector,
        outcome: &RoundOutcome,
        beta1: f64,
    ) -> Result<DriftReport> {
        let streams: BTreeMap<usize, Vec<ParamVector>> = outcome
            .results
            .iter()
            .map(|(&c, r)| (c, r.iterates[..r.steps].to_vec()))
            .collect();
        let xi = measure_xi(suite, &streams, x_before, beta1)?;
        let cal_e = measure_cal_e(suite, &streams, x_before, beta1)?;
        let gamma = if kind.is_tracking() {
            let g = measure_gamma(&self.snapshots, suite, x_before)?;
            for &c in &outcome.plan.trackers {
                let r = &outcome.results[&c];
                self.snapshots[c] = match kind {
                    AlgorithmKind::FAdamET => r.directions.clone(),
                    _ => r.iterates[..r.steps]
                        .iter()
                        .map(|x| suite.client_gradient(c, x))
                        .collect::<Result<_>>()?,
                };
            }
            Some(g)
        } else {
            None
        };
        let k = outcome.results.values().next().map(|r| r.steps).unwrap_or(0);
        Ok(DriftReport {
            gamma,
            xi,
            cal_e,
            grad_norm_sq: full_gradient(suite, x_before)?.norm_sq(),
            ck_weights: (1..=k).map(|k| c_total(beta1, k)).collect(),
        })
    }
}

/// Runs one trial until `T_max` rounds or the (smoothed) target is met.
pub fn run_trial(
    config: &ExperimentConfig,
    suite: &ProblemSuite,
    trial: usize,
    reference: &Reference,
    pool: Option<&rayon::ThreadPool>,
) -> Result<TrialOutcome> {
    let n = suite.num_clients();
    let kind = config.algorithm;
    let hyper = config.round_hyper();
    let target = threshold(config, reference)?;
    let half = config.smoothing_window / 2;
    let mut server = ServerState::new(ParamVector::zeros(suite.dimension), n);
    let mut ledger = CommLedger::new(n);
    let mut drift = config
        .diagnostics
        .then(|| DriftTracker::new(n, config.k, suite.dimension));
    let initial_gap = reference
        .optimum_loss
        .map(|f_star| suite.loss(&server.x).map(|f1| (f1 - f_star).max(0.0)))
        .transpose()?;

    let mut rows = Vec::new();
    let mut values = Vec::new();
    let mut reached = None;
    for t in 1..=config.t_max {
        let x_before = server.x.clone();
        let outcome = run_round(&mut server, suite, kind, &hyper, config.master_seed, trial as u64, pool)?;
        ledger.charge(&outcome.plan, kind);
        let report = match drift.as_mut() {
            Some(tracker) => Some(tracker.measure(kind, suite, &x_before, &outcome, config.beta1)?),
            None => None,
        };
        let rates = match (config.diagnostics, initial_gap) {
            (true, Some(gap)) => (
                Some(theoretical_rate(
                    RateKind::EstimateTracking,
                    gap,
                    config.k,
                    config.s,
                    t,
                    config.y,
                    n,
                )?),
                Some(theoretical_rate(
                    RateKind::GradientTracking,
                    gap,
                    config.k,
                    config.s,
                    t,
                    config.y,
                    n,
                )?),
            ),
            _ => (None, None),
        };
        let (down, up) = ledger.per_population_mean();
        let row = MetricsRow {
            trial,
            round: t,
            loss: suite.loss(&server.x)?,
            grad_norm_sq: full_gradient(suite, &server.x)?.norm_sq(),
            accuracy: suite.accuracy(&server.x)?,
            comm_down_cum: down,
            comm_up_cum: up,
            drift: report,
            rate_et: rates.0,
            rate_gt: rates.1,
        };
        if let (Some(target), Some(metric)) = (target, config.target.map(|t| t.metric)) {
            values.push(target_value(metric, &row));
            rows.push(row);
            if let Some(r) = rounds_to_target(&values, target, config.smoothing_window) {
                // decide only once the window right of r is complete
                if r + half <= values.len() {
                    reached = Some(r);
                    break;
                }
            }
        } else {
            rows.push(row);
        }
    }
    if reached.is_none() {
        if let (Some(target), Some(_)) = (target, config.target) {
            reached = rounds_to_target(&values, target, config.smoothing_window);
        }
    }
    let comm_to_target = reached.map(|r| rows[r - 1].comm_down_cum + rows[r - 1].comm_up_cum);
    debug_assert!(ledger.is_consistent());
    Ok(TrialOutcome {
        trial,
        rows,
        ledger,
        rounds_to_target: reached,
        comm_to_target,
        final_x: server.x,
    })
}

/// Builds the suite, computes references, and runs every trial. Trial `i`
/// draws all of its randomness from streams keyed by `(master_seed, i, …)`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    config.validate()?;
    let suite = config.suite.build(config.n)?.with_clipping(config.clip_gradients);
    run_experiment_on(config, suite)
}

/// As [`run_experiment`], on an already-built suite.
pub fn run_experiment_on(config: &ExperimentConfig, suite: ProblemSuite) -> Result<ExperimentOutcome> {
    config.validate()?;
    if suite.num_clients() != config.n {
        return Err(FedError::config(format!(
            "suite has {} clients but n = {}",
            suite.num_clients(),
            config.n
        )));
    }
    let reference = Reference::compute(config, &suite)?;
    let pool = if config.threads > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(config.threads)
                .build()
                .map_err(|e| FedError::config(format!("cannot start {} threads: {e}", config.threads)))?,
        )
    } else {
        None
    };
    let trials = (0..config.trials)
        .map(|t| run_trial(config, &suite, t, &reference, pool.as_ref()))
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentOutcome {
        config: config.clone(),
        suite,
        reference,
        trials,
    })
}

/// Mean and sample standard deviation.
pub(crate) fn mean_sd(values: &[f64]) -> (Option<f64>, Option<f64>) {
    if values.is_empty() {
        return (None, None);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (Some(mean), Some(sd))
}

/// Median where a trial that never reached the target counts as +∞.
pub(crate) fn censored_median(rounds: &[Option<usize>]) -> Option<f64> {
    if rounds.is_empty() {
        return None;
    }
    let mut v: Vec<f64> = rounds.iter().map(|r| r.map_or(f64::INFINITY, |x| x as f64)).collect();
    v.sort_by(|a, b| a.total_cmp(b));
    let mid = v.len() / 2;
    let m = if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    };
    m.is_finite().then_some(m)
}

/// Per-experiment summary written as JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub algorithm: AlgorithmKind,
    pub trials: usize,
    pub rounds_to_target: Vec<Option<usize>>,
    /// Over trials that reached the target.
    pub rounds_mean: Option<f64>,
    pub rounds_sd: Option<f64>,
    /// Unreached trials count as +∞.
    pub rounds_median: Option<f64>,
    pub comm_to_target_mean: Option<f64>,
    pub comm_to_target_sd: Option<f64>,
    pub final_loss: Vec<f64>,
    pub final_accuracy: Vec<Option<f64>>,
    /// Cumulative `(down, up)` units divided by `n`, averaged over trials.
    pub comm_per_population: (f64, f64),
    /// Cumulative `(down, up)` units divided by the clients that took part.
    pub comm_per_participant: (f64, f64),
    pub reference: Reference,
}

impl ExperimentOutcome {
    /// All rows in `(trial, round)` order.
    pub fn rows(&self) -> Vec<MetricsRow> {
        self.trials.iter().flat_map(|t| t.rows.iter().cloned()).collect()
    }

    pub fn rounds_to_target(&self) -> Vec<Option<usize>> {
        self.trials.iter().map(|t| t.rounds_to_target).collect()
    }

    pub fn median_rounds(&self) -> Option<f64> {
        censored_median(&self.rounds_to_target())
    }

    pub fn summary(&self) -> ExperimentSummary {
        let rounds = self.rounds_to_target();
        let reached: Vec<f64> = rounds.iter().flatten().map(|&r| r as f64).collect();
        let comm: Vec<f64> = self.trials.iter().filter_map(|t| t.comm_to_target).collect();
        let (rounds_mean, rounds_sd) = mean_sd(&reached);
        let (comm_mean, comm_sd) = mean_sd(&comm);
        let avg = |f: &dyn Fn(&CommLedger) -> (f64, f64)| {
            let k = self.trials.len().max(1) as f64;
            let (a, b) = self
                .trials
                .iter()
                .map(|t| f(&t.ledger))
                .fold((0.0, 0.0), |acc, v| (acc.0 + v.0, acc.1 + v.1));
            (a / k, b / k)
        };
        ExperimentSummary {
            algorithm: self.config.algorithm,
            trials: self.trials.len(),
            rounds_median: censored_median(&rounds),
            rounds_to_target: rounds,
            rounds_mean,
            rounds_sd,
            comm_to_target_mean: comm_mean,
            comm_to_target_sd: comm_sd,
            final_loss: self
                .trials
                .iter()
                .filter_map(|t| t.rows.last().map(|r| r.loss))
                .collect(),
            final_accuracy: self
                .trials
                .iter()
                .map(|t| t.rows.last().and_then(|r| r.accuracy))
                .collect(),
            comm_per_population: avg(&|l| l.per_population_mean()),
            comm_per_participant: avg(&|l| l.per_participant_mean()),
            reference: self.reference.clone(),
        }
    }
}
