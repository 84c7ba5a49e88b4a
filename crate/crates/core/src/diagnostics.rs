//! Runtime-measurable versions of the convergence analysis quantities.
//!
//! * the step-size conditions as a [`StepSizeBudget`];
//! * the moving-average weights `c^{(k,k')} = (1-β₁) β₁^{k-k'}` and their
//!   row sums `c^k`;
//! * the drift terms Γ (tracking drift), Ξ and ℰ (local deviation), with
//!   exact gradients standing in for expectations;
//! * the unit-constant rate expressions, for comparing shapes across
//!   `(K, S, T, Y, n)`;
//! * the fixed-point probe: start at the optimum with ideal corrections and
//!   measure how far iterates wander.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{FedError, Result};
use crate::fed_algorithms::{run_round, AlgorithmKind, RoundHyper, ServerState};
use crate::objectives::{full_gradient, ProblemSuite};
use crate::paramvec::ParamVector;

/// Step-size caps that guarantee the convergence bound, with the inputs echoed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepSizeBudget {
    /// Cap on `η_g η_l`.
    pub combined_cap: f64,
    /// Cap on `η_l` for gradient tracking.
    pub local_cap_gt: f64,
    /// Cap on `η_l` for estimate tracking.
    pub local_cap_et: f64,
    /// The four candidates whose minimum is `combined_cap`.
    pub combined_terms: [f64; 4],
    pub g: f64,
    pub l: f64,
    pub k: usize,
    pub t: usize,
    pub s: usize,
    pub beta1: f64,
    pub eps: f64,
}

pub fn step_size_budget(g: f64, l: f64, k: usize, t: usize, s: usize, beta1: f64, eps: f64) -> Result<StepSizeBudget> {
    if !(g > 0.0) || !(l > 0.0) || !(eps > 0.0) || k == 0 || t == 0 || s == 0 {
        return Err(FedError::domain("budget inputs G, L, K, T, S, eps must be positive"));
    }
    if !(beta1 > 0.0 && beta1 < 1.0) {
        return Err(FedError::domain(format!("beta1 must lie in (0, 1), got {beta1}")));
    }
    let (kf, tf, sf) = (k as f64, t as f64, s as f64);
    let mix = (1.0 - beta1) * beta1;
    let combined_terms = [
        mix / (8.0 * kf * l * (g + eps)),
        1.0 / (8.0 * kf * l),
        1.0 / (12.0 * tf * l),
        (sf / tf).sqrt(),
    ];
    let combined_cap = combined_terms.iter().cloned().fold(f64::INFINITY, f64::min);
    let local_cap_gt = 1.0 / (12.0 * tf.powf(1.5) * l);
    let et_first = (g + eps + mix).sqrt() * (g + eps).sqrt() / (12.0 * std::f64::consts::SQRT_2 * mix * kf * l);
    Ok(StepSizeBudget {
        combined_cap,
        local_cap_gt,
        local_cap_et: et_first.min(local_cap_gt),
        combined_terms,
        g,
        l,
        k,
        t,
        s,
        beta1,
        eps,
    })
}

/// `c^{(k,k')} = (1-β₁) β₁^{k-k'}` for `1 <= k' <= k`.
pub fn c_weight(beta1: f64, k: usize, k_prime: usize) -> f64 {
    debug_assert!(k_prime >= 1 && k_prime <= k);
    (1.0 - beta1) * beta1.powi((k - k_prime) as i32)
}

/// `c^k = Σ_{k'=1}^{k} c^{(k,k')}`.
pub fn c_total(beta1: f64, k: usize) -> f64 {
    (1..=k).map(|kp| c_weight(beta1, k, kp)).sum()
}

/// Weights table: row `k-1` holds `c^{(k,1)}, …, c^{(k,k)}`.
pub fn c_weights(beta1: f64, k_max: usize) -> Vec<Vec<f64>> {
    (1..=k_max)
        .map(|k| (1..=k).map(|kp| c_weight(beta1, k, kp)).collect())
        .collect()
}

/// Drift terms measured for one round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    pub gamma: Option<f64>,
    pub xi: f64,
    pub cal_e: f64,
    pub grad_norm_sq: f64,
    /// `c^1, …, c^K`.
    pub ck_weights: Vec<f64>,
}

fn deviation_sum(
    suite: &ProblemSuite,
    client: usize,
    iterates: &[ParamVector],
    x_ref: &ParamVector,
    beta1: f64,
) -> Result<f64> {
    let anchor = suite.client_gradient(client, x_ref)?;
    let grads = iterates
        .iter()
        .map(|x| suite.client_gradient(client, x))
        .collect::<Result<Vec<_>>>()?;
    let diffs = grads.iter().map(|g| g.sub(&anchor)).collect::<Result<Vec<_>>>()?;
    let mut total = 0.0;
    for k in 1..=diffs.len() {
        let mut m = ParamVector::zeros(anchor.dim());
        for (kp, diff) in diffs.iter().enumerate().take(k) {
            m.axpy(c_weight(beta1, k, kp + 1), diff)?;
        }
        total += m.norm_sq();
    }
    Ok(total)
}

/// Local deviation Ξ: for each measured client, `Σ_k ‖Σ_{k'≤k} c^{(k,k')}
/// ∇f_i(x_i^{(t,k')}) − c^k ∇f_i(x^{(t)})‖²`, averaged over the measured
/// clients. `streams[i]` holds `x_i^{(t,1)}, …, x_i^{(t,K)}`.
pub fn measure_xi(
    suite: &ProblemSuite,
    streams: &BTreeMap<usize, Vec<ParamVector>>,
    x_ref: &ParamVector,
    beta1: f64,
) -> Result<f64> {
    if streams.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for (&client, iterates) in streams {
        total += deviation_sum(suite, client, iterates, x_ref, beta1)?;
    }
    Ok(total / streams.len() as f64)
}

/// Local update deviation ℰ for estimate tracking. Its expected first moment
/// carries no tracking difference, so on the same trajectory it equals Ξ.
pub fn measure_cal_e(
    suite: &ProblemSuite,
    streams: &BTreeMap<usize, Vec<ParamVector>>,
    x_ref: &ParamVector,
    beta1: f64,
) -> Result<f64> {
    measure_xi(suite, streams, x_ref, beta1)
}

/// Tracking drift Γ: `(1/nK) Σ_i Σ_k ‖α_i^{t,k} − ∇f_i(x^{(t)})‖²`, where
/// `snapshots[i]` is client `i`'s last recorded tracking stream (zeros for
/// clients never tracked).
pub fn measure_gamma(snapshots: &[Vec<ParamVector>], suite: &ProblemSuite, x_ref: &ParamVector) -> Result<f64> {
    if snapshots.len() != suite.num_clients() {
        return Err(FedError::Dimension {
            expected: suite.num_clients(),
            found: snapshots.len(),
        });
    }
    let mut total = 0.0;
    let mut count = 0usize;
    for (client, stream) in snapshots.iter().enumerate() {
        let g = suite.client_gradient(client, x_ref)?;
        for alpha in stream {
            total += alpha.sub(&g)?.norm_sq();
        }
        count = count.max(stream.len());
    }
    if count == 0 {
        return Ok(0.0);
    }
    Ok(total / (snapshots.len() * count) as f64)
}

/// Right-hand side shape of the local-deviation lemma,
/// `4 K³ L² η_l² (G²(1+ε) + σ²) / ε`.
pub fn xi_bound(k: usize, l: f64, eta_l: f64, g: f64, eps: f64, sigma: f64) -> f64 {
    let kf = k as f64;
    4.0 * kf.powi(3) * l * l * eta_l * eta_l * (g * g * (1.0 + eps) + sigma * sigma) / eps
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RateKind {
    EstimateTracking,
    GradientTracking,
}

/// Sum of the rate terms with unit constants:
/// `gap/(K√(ST)) + K/T + [Y K²/(nT)] + K²/T³`, the bracketed term for
/// estimate tracking only.
pub fn theoretical_rate(kind: RateKind, f_gap: f64, k: usize, s: usize, t: usize, y: usize, n: usize) -> Result<f64> {
    if k == 0 || s == 0 || t == 0 || n == 0 {
        return Err(FedError::domain("rate inputs K, S, T, n must be positive"));
    }
    let (kf, sf, tf, yf, nf) = (k as f64, s as f64, t as f64, y as f64, n as f64);
    let mut rate = f_gap / (kf * (sf * tf).sqrt()) + kf / tf + kf * kf / tf.powi(3);
    if kind == RateKind::EstimateTracking {
        rate += yf * kf * kf / (nf * tf);
    }
    Ok(rate)
}

/// Drift of a fixed-point probe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub kind: AlgorithmKind,
    /// `max_t ‖x^{(t)} − x*‖`.
    pub global_drift: f64,
    /// `max_{t,i,k} ‖x_i^{(t,k)} − x*‖` over local iterates.
    pub local_drift: f64,
}

impl ProbeReport {
    /// The larger of the two drifts.
    pub fn max_drift(&self) -> f64 {
        self.global_drift.max(self.local_drift)
    }
}

/// Ideal starting state at the optimum: `x = x*`, `y_i = ∇f_i(x*)`,
/// `y = ∇f(x*)`, `g_α = 0`, zero moments.
pub fn ideal_start(suite: &ProblemSuite) -> Result<ServerState> {
    let x_star = suite
        .optimum
        .clone()
        .ok_or_else(|| FedError::config("fixed-point probe needs a quadratic suite with a known optimum"))?;
    let mut server = ServerState::new(x_star.clone(), suite.num_clients());
    for (i, y) in server.y_client.iter_mut().enumerate() {
        *y = suite.client_gradient(i, &x_star)?;
    }
    server.y = full_gradient(suite, &x_star)?;
    Ok(server)
}

/// Runs `rounds` full-participation rounds of `kind` from the ideal start
/// and reports the largest distance from `x*` reached by the global model
/// and by any local iterate.
pub fn fixed_point_probe(
    kind: AlgorithmKind,
    suite: &ProblemSuite,
    rounds: usize,
    hyper: &RoundHyper,
) -> Result<ProbeReport> {
    if !suite.is_quadratic() {
        return Err(FedError::config("fixed-point probe needs a quadratic suite"));
    }
    if suite.noise_sigma != 0.0 {
        return Err(FedError::config(
            "fixed-point probe needs noiseless gradients (sigma = 0)",
        ));
    }
    let n = suite.num_clients();
    let hyper = RoundHyper {
        participants: n,
        trackers: n,
        ..*hyper
    };
    let mut server = ideal_start(suite)?;
    let x_star = server.x.clone();
    let mut global_drift: f64 = 0.0;
    let mut local_drift: f64 = 0.0;
    for _ in 0..rounds {
        let outcome = run_round(&mut server, suite, kind, &hyper, 0, 0, None)?;
        for r in outcome.results.values() {
            for x in &r.iterates {
                local_drift = local_drift.max(x.dist(&x_star)?);
            }
        }
        global_drift = global_drift.max(server.x.dist(&x_star)?);
    }
    Ok(ProbeReport {
        kind,
        global_drift,
        local_drift,
    })
}

#[cfg(test)]
mod tests;
