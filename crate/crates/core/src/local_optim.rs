//! Per-client inner-loop primitives.
//!
//! The Adam step has no bias correction: the first moment restarts at zero each
//! round, the second moment is carried between rounds, and `v_hat` is the
//! AMSGrad running max. Parameter tracking enters at one of two places:
//! before the moments (gradient tracking) or after them, on the model update
//! (estimate tracking).

use serde::{Deserialize, Serialize};

use crate::error::{FedError, Result};
use crate::paramvec::{adam_direction, elementwise_max, hadamard, ParamVector};

/// Adam hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamHyper {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamHyper {
    fn default() -> Self {
        AdamHyper {
            beta1: 0.9,
            beta2: 0.99,
            eps: 1e-8,
        }
    }
}

impl AdamHyper {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(FedError::config(format!(
                "betas must lie in [0, 1), got ({}, {})",
                self.beta1, self.beta2
            )));
        }
        if !(self.eps > 0.0) {
            return Err(FedError::config(format!("eps must be positive, got {}", self.eps)));
        }
        Ok(())
    }
}

/// First moment, second moment and its running max for one client.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: ParamVector,
    pub v: ParamVector,
    pub v_hat: ParamVector,
    pub hyper: AdamHyper,
}

impl AdamState {
    pub fn zeros(dim: usize, hyper: AdamHyper) -> Self {
        AdamState {
            m: ParamVector::zeros(dim),
            v: ParamVector::zeros(dim),
            v_hat: ParamVector::zeros(dim),
            hyper,
        }
    }

    /// State at the start of a local interval: `m = 0`, `v` and `v_hat`
    /// carried in from the client's previous round.
    pub fn resume(carried: CarriedMoments, hyper: AdamHyper) -> Result<Self> {
        carried.v_hat.check_dim(carried.v.dim())?;
        if carried.v.iter().any(|&x| x < 0.0) {
            return Err(FedError::domain("carried second moment has a negative entry"));
        }
        Ok(AdamState {
            m: ParamVector::zeros(carried.v.dim()),
            v: carried.v,
            v_hat: carried.v_hat,
            hyper,
        })
    }

    pub fn carried(&self) -> CarriedMoments {
        CarriedMoments {
            v: self.v.clone(),
            v_hat: self.v_hat.clone(),
        }
    }

    /// One moment update; returns the direction `m' / (sqrt(v_hat') + eps)`.
    pub fn step(&mut self, g_hat: &ParamVector) -> Result<ParamVector> {
        g_hat.check_dim(self.m.dim())?;
        let AdamHyper { beta1, beta2, eps } = self.hyper;
        let sq = hadamard(g_hat, g_hat)?;
        let mut m = self.m.scale(beta1);
        m.axpy(1.0 - beta1, g_hat)?;
        let mut v = self.v.scale(beta2);
        v.axpy(1.0 - beta2, &sq)?;
        let v_hat = elementwise_max(&self.v_hat, &v)?;
        let delta = adam_direction(&m, &v_hat, eps)?;
        self.m = m;
        self.v = v;
        self.v_hat = v_hat;
        Ok(delta)
    }
}

/// Second-moment state a client carries from one round to the next.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CarriedMoments {
    pub v: ParamVector,
    pub v_hat: ParamVector,
}

impl CarriedMoments {
    pub fn zeros(dim: usize) -> Self {
        CarriedMoments {
            v: ParamVector::zeros(dim),
            v_hat: ParamVector::zeros(dim),
        }
    }
}

/// Functional form of [`AdamState::step`].
pub fn adam_step(state: &AdamState, g_hat: &ParamVector) -> Result<(AdamState, ParamVector)> {
    let mut next = state.clone();
    let delta = next.step(g_hat)?;
    Ok((next, delta))
}

/// Server tracking term `y` and the client's own `y_i`.
#[derive(Debug, Clone, Copy)]
pub struct TrackingPair<'a> {
    pub y_global: &'a ParamVector,
    pub y_local: &'a ParamVector,
}

impl TrackingPair<'_> {
    /// `y - y_i`.
    pub fn correction(&self) -> Result<ParamVector> {
        self.y_global.sub(self.y_local)
    }
}

/// Where the tracking correction is injected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CorrectionMode {
    /// Plain local Adam.
    None,
    /// Correct the Adam direction on the model update.
    EstimateTracking,
    /// Correct the raw gradient before the moments.
    GradientTracking,
}

/// `g + y - y_i` under gradient tracking, `g` otherwise.
pub fn correct_gradient(g: &ParamVector, tracking: TrackingPair<'_>, mode: CorrectionMode) -> Result<ParamVector> {
    tracking.y_global.check_dim(g.dim())?;
    tracking.y_local.check_dim(g.dim())?;
    match mode {
        CorrectionMode::GradientTracking => g.add(&tracking.correction()?),
        CorrectionMode::None | CorrectionMode::EstimateTracking => Ok(g.clone()),
    }
}

/// `x - η_l (Δ + y - y_i)` under estimate tracking, `x - η_l Δ` otherwise.
pub fn apply_local_update(
    x: &ParamVector,
    delta: &ParamVector,
    tracking: TrackingPair<'_>,
    mode: CorrectionMode,
    eta_l: f64,
) -> Result<ParamVector> {
    delta.check_dim(x.dim())?;
    tracking.y_global.check_dim(x.dim())?;
    tracking.y_local.check_dim(x.dim())?;
    if !(eta_l > 0.0) {
        return Err(FedError::config(format!("eta_l must be positive, got {eta_l}")));
    }
    let step = match mode {
        CorrectionMode::EstimateTracking => delta.add(&tracking.correction()?)?,
        CorrectionMode::GradientTracking | CorrectionMode::None => delta.clone(),
    };
    let mut next = x.clone();
    next.axpy(-eta_l, &step)?;
    Ok(next)
}

/// SCAFFOLD control variates `(c, c_i)`.
#[derive(Debug, Clone, Copy)]
pub struct ControlPair<'a> {
    pub c_global: &'a ParamVector,
    pub c_local: &'a ParamVector,
}

/// `x - η_l g` (FedAvg) or `x - η_l (g - c_i + c)` (SCAFFOLD).
pub fn sgd_step(x: &ParamVector, g: &ParamVector, control: Option<ControlPair<'_>>, eta_l: f64) -> Result<ParamVector> {
    g.check_dim(x.dim())?;
    let direction = match control {
        None => g.clone(),
        Some(ControlPair { c_global, c_local }) => {
            c_global.check_dim(x.dim())?;
            c_local.check_dim(x.dim())?;
            g.add(&c_global.sub(c_local)?)?
        }
    };
    let mut next = x.clone();
    next.axpy(-eta_l, &direction)?;
    Ok(next)
}

/// FedLADA's blended direction `α Δ + (1 - α) g_α`.
pub fn fedlada_direction(delta_local: &ParamVector, g_alpha: &ParamVector, alpha_weight: f64) -> Result<ParamVector> {
    g_alpha.check_dim(delta_local.dim())?;
    if !(0.0..=1.0).contains(&alpha_weight) {
        return Err(FedError::config(format!(
            "alpha_weight must lie in [0, 1], got {alpha_weight}"
        )));
    }
    let mut out = delta_local.scale(alpha_weight);
    out.axpy(1.0 - alpha_weight, g_alpha)?;
    Ok(out)
}
