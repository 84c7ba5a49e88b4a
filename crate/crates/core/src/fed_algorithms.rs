//! Server-side round logic for the six algorithms.
//!
//! One round: sample participants `S^t` and trackers `Y^t ⊆ S^t`, run each
//! participant's local interval (possibly in parallel), then reduce model
//! deltas and tracking updates in ascending client order.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{FedError, Result};
use crate::local_optim::{
    apply_local_update, correct_gradient, fedlada_direction, sgd_step, AdamHyper, AdamState, CarriedMoments,
    ControlPair, CorrectionMode, TrackingPair,
};
use crate::objectives::{stochastic_gradient, ProblemSuite};
use crate::paramvec::{ordered_sum, ParamVector};
use crate::seed::{self, Domain};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlgorithmKind {
    FedAvg,
    Scaffold,
    LocalAdam,
    FedLada,
    #[serde(rename = "fadamet")]
    FAdamET,
    #[serde(rename = "fadamgt")]
    FAdamGT,
}

impl AlgorithmKind {
    pub const ALL: [AlgorithmKind; 6] = [
        AlgorithmKind::FedAvg,
        AlgorithmKind::Scaffold,
        AlgorithmKind::LocalAdam,
        AlgorithmKind::FedLada,
        AlgorithmKind::FAdamET,
        AlgorithmKind::FAdamGT,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AlgorithmKind::FedAvg => "fedavg",
            AlgorithmKind::Scaffold => "scaffold",
            AlgorithmKind::LocalAdam => "localadam",
            AlgorithmKind::FedLada => "fedlada",
            AlgorithmKind::FAdamET => "fadamet",
            AlgorithmKind::FAdamGT => "fadamgt",
        }
    }

    pub fn uses_adam(self) -> bool {
        !matches!(self, AlgorithmKind::FedAvg | AlgorithmKind::Scaffold)
    }

    /// The parameter-tracking methods, which sample a tracker subset.
    pub fn is_tracking(self) -> bool {
        matches!(self, AlgorithmKind::FAdamET | AlgorithmKind::FAdamGT)
    }

    pub fn correction_mode(self) -> CorrectionMode {
        match self {
            AlgorithmKind::FAdamET => CorrectionMode::EstimateTracking,
            AlgorithmKind::FAdamGT => CorrectionMode::GradientTracking,
            _ => CorrectionMode::None,
        }
    }

    /// Protocol default local step: 0.1 for SGD methods, 0.001 for Adam methods.
    pub fn default_eta_l(self) -> f64 {
        if self.uses_adam() {
            1e-3
        } else {
            0.1
        }
    }
}

impl fmt::Display for AlgorithmKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AlgorithmKind {
    type Err = FedError;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.to_ascii_lowercase().replace(['-', '_'], "");
        AlgorithmKind::ALL.into_iter().find(|k| k.name() == key).ok_or_else(|| {
            FedError::config(format!(
                "unknown algorithm '{s}' (expected one of fedavg, scaffold, localadam, fedlada, fadamet, fadamgt)"
            ))
        })
    }
}

/// Participants `S^t` and trackers `Y^t`, both ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundPlan {
    pub participants: Vec<usize>,
    pub trackers: Vec<usize>,
}

impl RoundPlan {
    pub fn is_tracker(&self, client: usize) -> bool {
        self.trackers.binary_search(&client).is_ok()
    }
}

/// Draws `S` participants uniformly without replacement from `0..n`, then `Y`
/// trackers uniformly without replacement from the participants.
pub fn sample_round<R: Rng + ?Sized>(n: usize, s: usize, y: usize, rng: &mut R) -> Result<RoundPlan> {
    let participants = sample_subset(n, s, rng)?;
    let trackers = sample_trackers(&participants, y, rng)?;
    Ok(RoundPlan { participants, trackers })
}

fn sample_subset<R: Rng + ?Sized>(n: usize, s: usize, rng: &mut R) -> Result<Vec<usize>> {
    if s == 0 || s > n {
        return Err(FedError::config(format!("need 1 <= S <= n, got S={s}, n={n}")));
    }
    let mut chosen = index::sample(rng, n, s).into_vec();
    chosen.sort_unstable();
    Ok(chosen)
}

fn sample_trackers<R: Rng + ?Sized>(participants: &[usize], y: usize, rng: &mut R) -> Result<Vec<usize>> {
    if y > participants.len() {
        return Err(FedError::config(format!(
            "need Y <= S, got Y={y}, S={}",
            participants.len()
        )));
    }
    let mut trackers: Vec<usize> = index::sample(rng, participants.len(), y)
        .into_iter()
        .map(|i| participants[i])
        .collect();
    trackers.sort_unstable();
    Ok(trackers)
}

/// Global model, global tracking term, and the per-client state the
/// simulator keeps on the clients' behalf.
///
/// SCAFFOLD reuses `y`/`y_client` as its control variates `c`/`c_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ServerState {
    pub x: ParamVector,
    pub y: ParamVector,
    pub y_client: Vec<ParamVector>,
    pub moments: Vec<CarriedMoments>,
    /// FedLADA's broadcast global direction.
    pub g_alpha: ParamVector,
    /// 1-based index of the next round.
    pub round: usize,
}

impl ServerState {
    /// Zero tracking terms and moments, model at `x0`.
    pub fn new(x0: ParamVector, n: usize) -> Self {
        let d = x0.dim();
        ServerState {
            y: ParamVector::zeros(d),
            y_client: vec![ParamVector::zeros(d); n],
            moments: vec![CarriedMoments::zeros(d); n],
            g_alpha: ParamVector::zeros(d),
            x: x0,
            round: 1,
        }
    }

    pub fn dim(&self) -> usize {
        self.x.dim()
    }

    pub fn num_clients(&self) -> usize {
        self.y_client.len()
    }

    /// `y - (1/n) Σ y_i`.
    pub fn tracking_mean_gap(&self) -> Result<ParamVector> {
        let refs: Vec<&ParamVector> = self.y_client.iter().collect();
        let mean = ordered_sum(self.dim(), &refs)?.scale(1.0 / self.num_clients() as f64);
        self.y.sub(&mean)
    }
}

/// What one participant sends back, plus the streams diagnostics need.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalResult {
    pub client: usize,
    /// `x_i^{(t,K+1)} - x^{(t)}`.
    pub model_delta: ParamVector,
    /// `y_i^{(t+1)} - y_i^{(t)}`, present iff the client updated its tracking term.
    pub tracking_update: Option<ParamVector>,
    pub moments: CarriedMoments,
    /// `(1/K) Σ_k g_i^{(t,k)}`.
    pub grad_mean: ParamVector,
    pub steps: usize,
    /// `x_i^{(t,1)}, …, x_i^{(t,K+1)}`.
    pub iterates: Vec<ParamVector>,
    /// Per-step update directions (the Adam `Δ_i^{(t,k)}`, or the SGD step direction).
    pub directions: Vec<ParamVector>,
}

/// Addresses the per-step gradient-noise streams of one round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NoiseKey {
    pub master_seed: u64,
    pub trial: u64,
    pub round: u64,
}

impl NoiseKey {
    fn stream(&self, client: usize, step: usize) -> seed::Stream {
        seed::stream(
            self.master_seed,
            Domain::Gradient,
            &[self.trial, self.round, client as u64, step as u64],
        )
    }
}

/// Local update rule for one interval.
#[derive(Debug, Clone, Copy)]
enum LocalRule<'a> {
    Adam {
        mode: CorrectionMode,
        tracking: TrackingPair<'a>,
        hyper: AdamHyper,
    },
    Lada {
        g_alpha: &'a ParamVector,
        alpha_weight: f64,
        hyper: AdamHyper,
    },
    Sgd {
        control: Option<ControlPair<'a>>,
    },
}

struct Trace {
    iterates: Vec<ParamVector>,
    directions: Vec<ParamVector>,
    grad_sum: ParamVector,
    moments: CarriedMoments,
}

#[allow(clippy::too_many_arguments)]
fn run_steps(
    suite: &ProblemSuite,
    client: usize,
    x0: &ParamVector,
    carried: CarriedMoments,
    k_steps: usize,
    eta_l: f64,
    rule: LocalRule<'_>,
    noise: NoiseKey,
) -> Result<Trace> {
    if k_steps == 0 {
        return Err(FedError::config("K must be at least 1"));
    }
    if !(eta_l > 0.0) {
        return Err(FedError::config(format!("eta_l must be positive, got {eta_l}")));
    }
    x0.check_dim(suite.dimension)?;
    let hyper = match rule {
        LocalRule::Adam { hyper, .. } | LocalRule::Lada { hyper, .. } => hyper,
        LocalRule::Sgd { .. } => AdamHyper::default(),
    };
    let mut adam = AdamState::resume(carried.clone(), hyper)?;
    let mut x = x0.clone();
    let mut iterates = Vec::with_capacity(k_steps + 1);
    let mut directions = Vec::with_capacity(k_steps);
    let mut grad_sum = ParamVector::zeros(x0.dim());
    iterates.push(x.clone());
    for k in 0..k_steps {
        let mut rng = noise.stream(client, k);
        let g = stochastic_gradient(suite, client, &x, &mut rng)?;
        grad_sum.axpy(1.0, &g)?;
        let (next, direction) = match rule {
            LocalRule::Adam { mode, tracking, .. } => {
                let g_hat = correct_gradient(&g, tracking, mode)?;
                let delta = adam.step(&g_hat)?;
                (apply_local_update(&x, &delta, tracking, mode, eta_l)?, delta)
            }
            LocalRule::Lada {
                g_alpha, alpha_weight, ..
            } => {
                let delta = adam.step(&g)?;
                let dir = fedlada_direction(&delta, g_alpha, alpha_weight)?;
                let mut next = x.clone();
                next.axpy(-eta_l, &dir)?;
                (next, delta)
            }
            LocalRule::Sgd { control } => (sgd_step(&x, &g, control, eta_l)?, g),
        };
        if !next.is_finite() {
            return Err(FedError::domain(format!(
                "client {client} diverged at local step {}",
                k + 1
            )));
        }
        x = next;
        iterates.push(x.clone());
        directions.push(direction);
    }
    let moments = match rule {
        LocalRule::Sgd { .. } => carried,
        _ => adam.carried(),
    };
    Ok(Trace {
        iterates,
        directions,
        grad_sum,
        moments,
    })
}

fn finish_result(
    client: usize,
    x0: &ParamVector,
    trace: Trace,
    tracking_update: Option<ParamVector>,
) -> Result<LocalResult> {
    let k = trace.directions.len();
    let last = trace.iterates.last().expect("K >= 1");
    Ok(LocalResult {
        client,
        model_delta: last.sub(x0)?,
        tracking_update,
        moments: trace.moments,
        grad_mean: trace.grad_sum.scale(1.0 / k as f64),
        steps: k,
        iterates: trace.iterates,
        directions: trace.directions,
    })
}

/// `y_i - y + (x^{(t)} - x_i^{(t,K+1)}) / (K η_l)`: the estimate-tracking
/// (and SCAFFOLD option II) refresh.
fn displacement_refresh(
    tracking: TrackingPair<'_>,
    x0: &ParamVector,
    last: &ParamVector,
    k: usize,
    eta_l: f64,
) -> Result<ParamVector> {
    let mut next = tracking.y_local.sub(tracking.y_global)?;
    next.axpy(1.0 / (k as f64 * eta_l), &x0.sub(last)?)?;
    Ok(next)
}

/// K local Adam steps with the given tracking mode.
///
/// The first moment restarts at zero; `carried` seeds `v` and `v_hat`. When
/// `is_tracker`, the result carries `y_i^{(t+1)} - y_i^{(t)}` per the mode
/// (estimate tracking: displacement refresh; gradient tracking: mean raw
/// gradient).
#[allow(clippy::too_many_arguments)]
pub fn run_local_interval(
    suite: &ProblemSuite,
    client: usize,
    x0: &ParamVector,
    tracking: TrackingPair<'_>,
    carried: CarriedMoments,
    k_steps: usize,
    eta_l: f64,
    hyper: AdamHyper,
    mode: CorrectionMode,
    is_tracker: bool,
    noise: NoiseKey,
) -> Result<LocalResult> {
    let rule = LocalRule::Adam { mode, tracking, hyper };
    let trace = run_steps(suite, client, x0, carried, k_steps, eta_l, rule, noise)?;
    let update = if is_tracker {
        let refreshed = match mode {
            CorrectionMode::EstimateTracking => {
                displacement_refresh(tracking, x0, trace.iterates.last().expect("K >= 1"), k_steps, eta_l)?
            }
            CorrectionMode::GradientTracking => trace.grad_sum.scale(1.0 / k_steps as f64),
            CorrectionMode::None => {
                return Err(FedError::protocol("plain local Adam has no tracking term to refresh"));
            }
        };
        Some(refreshed.sub(tracking.y_local)?)
    } else {
        None
    };
    finish_result(client, x0, trace, update)
}

/// K local SGD steps; with `control`, SCAFFOLD's corrected step and option-II
/// control refresh.
pub fn run_local_sgd(
    suite: &ProblemSuite,
    client: usize,
    x0: &ParamVector,
    control: Option<ControlPair<'_>>,
    k_steps: usize,
    eta_l: f64,
    noise: NoiseKey,
) -> Result<LocalResult> {
    let d = x0.dim();
    let trace = run_steps(
        suite,
        client,
        x0,
        CarriedMoments::zeros(d),
        k_steps,
        eta_l,
        LocalRule::Sgd { control },
        noise,
    )?;
    let update = match control {
        Some(ControlPair { c_global, c_local }) => {
            let pair = TrackingPair {
                y_global: c_global,
                y_local: c_local,
            };
            let refreshed = displacement_refresh(pair, x0, trace.iterates.last().expect("K >= 1"), k_steps, eta_l)?;
            Some(refreshed.sub(c_local)?)
        }
        None => None,
    };
    finish_result(client, x0, trace, update)
}

/// K local FedLADA steps: Adam direction blended with the broadcast `g_α`.
#[allow(clippy::too_many_arguments)]
pub fn run_local_fedlada(
    suite: &ProblemSuite,
    client: usize,
    x0: &ParamVector,
    g_alpha: &ParamVector,
    alpha_weight: f64,
    carried: CarriedMoments,
    k_steps: usize,
    eta_l: f64,
    hyper: AdamHyper,
    noise: NoiseKey,
) -> Result<LocalResult> {
    let rule = LocalRule::Lada {
        g_alpha,
        alpha_weight,
        hyper,
    };
    let trace = run_steps(suite, client, x0, carried, k_steps, eta_l, rule, noise)?;
    finish_result(client, x0, trace, None)
}

fn check_keys(results: &BTreeMap<usize, LocalResult>, expected: &[usize], what: &str) -> Result<()> {
    if results.len() != expected.len() || !expected.iter().all(|c| results.contains_key(c)) {
        let got: Vec<usize> = results.keys().copied().collect();
        return Err(FedError::protocol(format!(
            "{what}: results from {got:?} do not match participants {expected:?}"
        )));
    }
    Ok(())
}

/// `x ← x + η_g (1/S) Σ_{i∈S} (x_i^{(t,K+1)} − x^{(t)})`; participants'
/// carried moments are stored back.
pub fn aggregate_models(
    server: &mut ServerState,
    results: &BTreeMap<usize, LocalResult>,
    plan: &RoundPlan,
    eta_g: f64,
) -> Result<()> {
    check_keys(results, &plan.participants, "model aggregation")?;
    let deltas: Vec<&ParamVector> = results.values().map(|r| &r.model_delta).collect();
    let sum = ordered_sum(server.dim(), &deltas)?;
    server.x.axpy(eta_g / plan.participants.len() as f64, &sum)?;
    for (client, r) in results {
        r.moments.v.check_dim(server.dim())?;
        server.moments[*client] = r.moments.clone();
    }
    Ok(())
}

/// `y ← y + (1/n) Σ_{i∈Y} (y_i^{(t+1)} − y_i^{(t)})` and `y_i ← y_i^{(t+1)}`
/// for trackers; everyone else keeps `y_i`.
pub fn aggregate_tracking(
    server: &mut ServerState,
    results: &BTreeMap<usize, LocalResult>,
    plan: &RoundPlan,
    n: usize,
) -> Result<()> {
    let mut updates: Vec<(usize, &ParamVector)> = Vec::with_capacity(plan.trackers.len());
    for (client, r) in results {
        match (&r.tracking_update, plan.is_tracker(*client)) {
            (Some(u), true) => updates.push((*client, u)),
            (None, false) => {}
            (Some(_), false) => {
                return Err(FedError::protocol(format!(
                    "client {client} sent a tracking update but is not a tracker"
                )))
            }
            (None, true) => {
                return Err(FedError::protocol(format!(
                    "tracker {client} did not send a tracking update"
                )))
            }
        }
    }
    if updates.len() != plan.trackers.len() {
        return Err(FedError::protocol("tracking results do not cover every tracker"));
    }
    if updates.is_empty() {
        return Ok(());
    }
    let refs: Vec<&ParamVector> = updates.iter().map(|(_, u)| *u).collect();
    let sum = ordered_sum(server.dim(), &refs)?;
    server.y.axpy(1.0 / n as f64, &sum)?;
    for (client, u) in updates {
        server.y_client[client].axpy(1.0, u)?;
    }
    Ok(())
}

/// Hyperparameters of one round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundHyper {
    pub participants: usize,
    pub trackers: usize,
    pub local_steps: usize,
    pub eta_l: f64,
    pub eta_g: f64,
    pub adam: AdamHyper,
    pub alpha_weight: f64,
}

impl RoundHyper {
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.participants == 0 || self.participants > n {
            return Err(FedError::config(format!(
                "need 1 <= S <= n, got S={}, n={n}",
                self.participants
            )));
        }
        if self.trackers > self.participants {
            return Err(FedError::config(format!(
                "need Y <= S, got Y={}, S={}",
                self.trackers, self.participants
            )));
        }
        if self.local_steps == 0 {
            return Err(FedError::config("K must be at least 1"));
        }
        if !(self.eta_l > 0.0) || !(self.eta_g > 0.0) {
            return Err(FedError::config("step sizes must be positive"));
        }
        if !(0.0..=1.0).contains(&self.alpha_weight) {
            return Err(FedError::config("alpha_weight must lie in [0, 1]"));
        }
        self.adam.validate()
    }

    /// Trackers actually used by `kind`: `Y` for the tracking methods, every
    /// participant for SCAFFOLD (control refresh), none otherwise.
    pub fn effective_trackers(&self, kind: AlgorithmKind) -> usize {
        match kind {
            AlgorithmKind::FAdamET | AlgorithmKind::FAdamGT => self.trackers,
            AlgorithmKind::Scaffold => self.participants,
            _ => 0,
        }
    }
}

/// Everything one round produced.
#[derive(Debug, Clone)]
pub struct RoundOutcome {
    pub round: usize,
    pub plan: RoundPlan,
    pub results: BTreeMap<usize, LocalResult>,
    /// `y^{(t)}` and `y_i^{(t)}` as broadcast at the start of the round.
    pub y_before: ParamVector,
}

/// Draws the plan of round `server.round` for `kind`. Participants and
/// trackers come from separate streams so every algorithm sees the same
/// participants under the same seed.
pub fn plan_round(n: usize, kind: AlgorithmKind, hyper: &RoundHyper, noise: NoiseKey) -> Result<RoundPlan> {
    let mut rng = seed::stream(noise.master_seed, Domain::Sampling, &[noise.trial, noise.round, 0]);
    let participants = sample_subset(n, hyper.participants, &mut rng)?;
    let trackers = match kind {
        AlgorithmKind::Scaffold => participants.clone(),
        k if k.is_tracking() => {
            let mut rng = seed::stream(noise.master_seed, Domain::Sampling, &[noise.trial, noise.round, 1]);
            sample_trackers(&participants, hyper.trackers, &mut rng)?
        }
        _ => Vec::new(),
    };
    Ok(RoundPlan { participants, trackers })
}

/// Runs the participants' local intervals for a fixed plan.
pub fn run_participants(
    server: &ServerState,
    suite: &ProblemSuite,
    kind: AlgorithmKind,
    hyper: &RoundHyper,
    plan: &RoundPlan,
    noise: NoiseKey,
    pool: Option<&rayon::ThreadPool>,
) -> Result<BTreeMap<usize, LocalResult>> {
    let local = |&client: &usize| -> Result<LocalResult> {
        let carried = server.moments[client].clone();
        let x0 = &server.x;
        match kind {
            AlgorithmKind::FedAvg => run_local_sgd(suite, client, x0, None, hyper.local_steps, hyper.eta_l, noise),
            AlgorithmKind::Scaffold => {
                let control = ControlPair {
                    c_global: &server.y,
                    c_local: &server.y_client[client],
                };
                run_local_sgd(suite, client, x0, Some(control), hyper.local_steps, hyper.eta_l, noise)
            }
            AlgorithmKind::FedLada => run_local_fedlada(
                suite,
                client,
                x0,
                &server.g_alpha,
                hyper.alpha_weight,
                carried,
                hyper.local_steps,
                hyper.eta_l,
                hyper.adam,
                noise,
            ),
            AlgorithmKind::LocalAdam | AlgorithmKind::FAdamET | AlgorithmKind::FAdamGT => {
                let tracking = TrackingPair {
                    y_global: &server.y,
                    y_local: &server.y_client[client],
                };
                run_local_interval(
                    suite,
                    client,
                    x0,
                    tracking,
                    carried,
                    hyper.local_steps,
                    hyper.eta_l,
                    hyper.adam,
                    kind.correction_mode(),
                    plan.is_tracker(client),
                    noise,
                )
            }
        }
    };
    let collected: Vec<Result<LocalResult>> = match pool {
        Some(pool) => pool.install(|| plan.participants.par_iter().map(local).collect()),
        None => plan.participants.iter().map(local).collect(),
    };
    let mut results = BTreeMap::new();
    for r in collected {
        let r = r?;
        results.insert(r.client, r);
    }
    Ok(results)
}

/// Server-side bookkeeping after the local intervals of a round.
pub fn apply_round(
    server: &mut ServerState,
    kind: AlgorithmKind,
    hyper: &RoundHyper,
    plan: &RoundPlan,
    results: &BTreeMap<usize, LocalResult>,
) -> Result<()> {
    let n = server.num_clients();
    aggregate_models(server, results, plan, hyper.eta_g)?;
    aggregate_tracking(server, results, plan, n)?;
    if kind == AlgorithmKind::FedLada {
        // g_α ← mean over participants of (x^{(t)} − x_i^{(t,K+1)}) / (K η_l)
        let deltas: Vec<&ParamVector> = results.values().map(|r| &r.model_delta).collect();
        let sum = ordered_sum(server.dim(), &deltas)?;
        let scale = -1.0 / (plan.participants.len() as f64 * hyper.local_steps as f64 * hyper.eta_l);
        server.g_alpha = sum.scale(scale);
    }
    if !server.x.is_finite() {
        return Err(FedError::domain(format!(
            "global model diverged in round {}",
            server.round
        )));
    }
    server.round += 1;
    Ok(())
}

/// One full round of `kind`: sample, broadcast, local intervals, aggregate.
pub fn run_round(
    server: &mut ServerState,
    suite: &ProblemSuite,
    kind: AlgorithmKind,
    hyper: &RoundHyper,
    master_seed: u64,
    trial: u64,
    pool: Option<&rayon::ThreadPool>,
) -> Result<RoundOutcome> {
    let n = suite.num_clients();
    if server.num_clients() != n {
        return Err(FedError::config(
            "server state and suite disagree on the number of clients",
        ));
    }
    server.x.check_dim(suite.dimension)?;
    hyper.validate(n)?;
    let noise = NoiseKey {
        master_seed,
        trial,
        round: server.round as u64,
    };
    let plan = plan_round(n, kind, hyper, noise)?;
    let results = run_participants(server, suite, kind, hyper, &plan, noise, pool)?;
    let y_before = server.y.clone();
    let round = server.round;
    apply_round(server, kind, hyper, &plan, &results)?;
    Ok(RoundOutcome {
        round,
        plan,
        results,
        y_before,
    })
}

#[cfg(test)]
mod tests;
