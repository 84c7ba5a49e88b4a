//! Synthetic client objectives with exact and stochastic gradient oracles.
//!
//! A [`ProblemSuite`] holds `n` client losses `f_i` over a shared dimension `d`;
//! the global objective is their unweighted mean. Two kinds are supported:
//!
//! * quadratic: `f_i(x) = ½ (x - b_i)ᵀ A_i (x - b_i)` with SPD `A_i`, whose
//!   global minimiser is available in closed form;
//! * logistic: mean binary logistic loss over a data shard plus `½ λ ‖x‖²`.

mod logistic;
mod partition;
mod quadratic;

pub use logistic::{make_dirichlet_logistic_suite, LogisticSuiteSpec};
pub use partition::{dirichlet_partition, DirichletPartition, PartitionSpec};
pub use quadratic::{make_quadratic_suite, two_client_symmetric, QuadraticSuiteSpec};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{FedError, Result};
use crate::matrix::DenseMatrix;
use crate::paramvec::{ordered_sum, ParamVector};

/// One client's loss.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClientObjective {
    Quadratic {
        curvature: DenseMatrix,
        center: ParamVector,
    },
    Logistic {
        features: DenseMatrix,
        /// Binary labels in {0, 1}.
        labels: Vec<u8>,
        l2_reg: f64,
    },
}

impl ClientObjective {
    /// Quadratic client; checks that the curvature is symmetric with smallest
    /// eigenvalue at least `mu`.
    pub fn quadratic(curvature: DenseMatrix, center: ParamVector, mu: f64) -> Result<Self> {
        if curvature.rows != curvature.cols {
            return Err(FedError::config("curvature must be square"));
        }
        center.check_dim(curvature.rows)?;
        if !curvature.is_symmetric(1e-10) {
            return Err(FedError::config("curvature must be symmetric"));
        }
        let (min_eig, _) = curvature.symmetric_eigen_range();
        if !(mu > 0.0) || min_eig < mu * (1.0 - 1e-9) {
            return Err(FedError::config(format!(
                "curvature is not positive definite with margin {mu} (smallest eigenvalue {min_eig})"
            )));
        }
        Ok(ClientObjective::Quadratic { curvature, center })
    }

    pub fn logistic(features: DenseMatrix, labels: Vec<u8>, l2_reg: f64) -> Result<Self> {
        if features.rows == 0 {
            return Err(FedError::config("logistic client needs at least one sample"));
        }
        if labels.len() != features.rows {
            return Err(FedError::Dimension {
                expected: features.rows,
                found: labels.len(),
            });
        }
        if labels.iter().any(|&l| l > 1) {
            return Err(FedError::config("logistic labels must be 0 or 1"));
        }
        if !(l2_reg >= 0.0) {
            return Err(FedError::config("l2_reg must be nonnegative"));
        }
        Ok(ClientObjective::Logistic {
            features,
            labels,
            l2_reg,
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            ClientObjective::Quadratic { center, .. } => center.dim(),
            ClientObjective::Logistic { features, .. } => features.cols,
        }
    }

    pub fn num_samples(&self) -> usize {
        match self {
            ClientObjective::Quadratic { .. } => 0,
            ClientObjective::Logistic { labels, .. } => labels.len(),
        }
    }

    /// Lipschitz constant of the gradient (exact for quadratics, the standard
    /// `¼ max‖a‖² + λ` bound for logistic loss).
    pub fn smoothness(&self) -> f64 {
        match self {
            ClientObjective::Quadratic { curvature, .. } => curvature.symmetric_eigen_range().1,
            ClientObjective::Logistic { features, l2_reg, .. } => {
                let max_row = (0..features.rows)
                    .map(|r| features.row(r).iter().map(|v| v * v).sum::<f64>())
                    .fold(0.0, f64::max);
                0.25 * max_row + l2_reg
            }
        }
    }

    pub fn loss(&self, x: &ParamVector) -> Result<f64> {
        x.check_dim(self.dim())?;
        match self {
            ClientObjective::Quadratic { curvature, center } => {
                let diff = x.sub(center)?;
                let ad = curvature.matvec(diff.as_slice())?;
                Ok(0.5 * diff.iter().zip(&ad).map(|(a, b)| a * b).sum::<f64>())
            }
            ClientObjective::Logistic {
                features,
                labels,
                l2_reg,
            } => {
                let z = features.matvec(x.as_slice())?;
                let total: f64 = z.iter().zip(labels).map(|(&zi, &l)| softplus(-signed(l) * zi)).sum();
                Ok(total / labels.len() as f64 + 0.5 * l2_reg * x.norm_sq())
            }
        }
    }

    pub fn gradient(&self, x: &ParamVector) -> Result<ParamVector> {
        x.check_dim(self.dim())?;
        match self {
            ClientObjective::Quadratic { curvature, center } => {
                let diff = x.sub(center)?;
                Ok(ParamVector::new(curvature.matvec(diff.as_slice())?))
            }
            ClientObjective::Logistic { labels, .. } => {
                let rows: Vec<usize> = (0..labels.len()).collect();
                self.logistic_batch_gradient(x, &rows)
            }
        }
    }

    fn logistic_batch_gradient(&self, x: &ParamVector, rows: &[usize]) -> Result<ParamVector> {
        let ClientObjective::Logistic {
            features,
            labels,
            l2_reg,
        } = self
        else {
            unreachable!("batch gradient on a quadratic client");
        };
        let d = features.cols;
        let mut grad = vec![0.0; d];
        for &r in rows {
            let a = features.row(r);
            let s = signed(labels[r]);
            let z: f64 = a.iter().zip(x.as_slice()).map(|(p, q)| p * q).sum();
            // d/dz softplus(-s z) = -s * sigmoid(-s z)
            let w = -s * sigmoid(-s * z);
            for (g, &aj) in grad.iter_mut().zip(a) {
                *g += w * aj;
            }
        }
        let inv = 1.0 / rows.len() as f64;
        Ok(ParamVector::new(
            grad.iter()
                .zip(x.as_slice())
                .map(|(g, xj)| g * inv + l2_reg * xj)
                .collect(),
        ))
    }

    /// Number of correctly classified samples (logistic only).
    pub fn correct_predictions(&self, x: &ParamVector) -> Result<usize> {
        match self {
            ClientObjective::Quadratic { .. } => Ok(0),
            ClientObjective::Logistic { features, labels, .. } => {
                let z = features.matvec(x.as_slice())?;
                Ok(z.iter().zip(labels).filter(|(&zi, &l)| (zi > 0.0) == (l == 1)).count())
            }
        }
    }
}

fn signed(label: u8) -> f64 {
    if label == 1 {
        1.0
    } else {
        -1.0
    }
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// The `n` client objectives plus the constants the step-size budget needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSuite {
    pub clients: Vec<ClientObjective>,
    pub dimension: usize,
    /// `L`: at least the largest client smoothness constant.
    pub smoothness_bound: f64,
    /// `G`: empirical bound on stochastic gradient norms.
    pub grad_bound_estimate: f64,
    /// `σ`: standard deviation of the gradient noise (quadratics) or the
    /// minibatch noise measured at the origin (logistic).
    pub noise_sigma: f64,
    /// Minibatch size for logistic clients.
    pub batch_size: usize,
    /// Optional clipping of stochastic gradients to norm `G`.
    #[serde(default)]
    pub clip_norm: Option<f64>,
    /// Closed-form global minimiser, when known.
    #[serde(default)]
    pub optimum: Option<ParamVector>,
    pub seed: u64,
}

impl ProblemSuite {
    /// Assembles a suite from explicit clients. `grad_bound_estimate` is left
    /// at zero; call [`estimate_grad_bound`] to fill it.
    pub fn from_clients(clients: Vec<ClientObjective>, noise_sigma: f64, batch_size: usize) -> Result<Self> {
        let first = clients
            .first()
            .ok_or_else(|| FedError::config("a suite needs at least one client"))?;
        let dimension = first.dim();
        if dimension == 0 {
            return Err(FedError::config("dimension must be at least 1"));
        }
        for c in &clients {
            if c.dim() != dimension {
                return Err(FedError::Dimension {
                    expected: dimension,
                    found: c.dim(),
                });
            }
        }
        if !(noise_sigma >= 0.0) {
            return Err(FedError::config("noise_sigma must be nonnegative"));
        }
        let smoothness_bound = clients.iter().map(|c| c.smoothness()).fold(0.0, f64::max);
        let optimum = if clients.iter().all(|c| matches!(c, ClientObjective::Quadratic { .. })) {
            Some(quadratic::closed_form_optimum(&clients)?)
        } else {
            None
        };
        Ok(ProblemSuite {
            clients,
            dimension,
            smoothness_bound,
            grad_bound_estimate: 0.0,
            noise_sigma,
            batch_size: batch_size.max(1),
            clip_norm: None,
            optimum,
            seed: 0,
        })
    }

    pub fn num_clients(&self) -> usize {
        self.clients.len()
    }

    pub fn is_quadratic(&self) -> bool {
        matches!(self.clients.first(), Some(ClientObjective::Quadratic { .. }))
    }

    pub fn is_logistic(&self) -> bool {
        matches!(self.clients.first(), Some(ClientObjective::Logistic { .. }))
    }

    pub fn with_clipping(mut self, enabled: bool) -> Self {
        self.clip_norm = enabled.then_some(self.grad_bound_estimate);
        self
    }

    fn client(&self, client: usize) -> Result<&ClientObjective> {
        self.clients.get(client).ok_or_else(|| {
            FedError::config(format!(
                "client index {client} out of range for {} clients",
                self.clients.len()
            ))
        })
    }

    pub fn client_gradient(&self, client: usize, x: &ParamVector) -> Result<ParamVector> {
        self.client(client)?.gradient(x)
    }

    pub fn client_loss(&self, client: usize, x: &ParamVector) -> Result<f64> {
        self.client(client)?.loss(x)
    }

    /// `f(x) = (1/n) Σ f_i(x)`.
    pub fn loss(&self, x: &ParamVector) -> Result<f64> {
        let mut total = 0.0;
        for c in &self.clients {
            total += c.loss(x)?;
        }
        Ok(total / self.clients.len() as f64)
    }

    /// Fraction of all samples classified correctly; `None` for quadratics.
    pub fn accuracy(&self, x: &ParamVector) -> Result<Option<f64>> {
        if !self.is_logistic() {
            return Ok(None);
        }
        let mut correct = 0;
        let mut total = 0;
        for c in &self.clients {
            correct += c.correct_predictions(x)?;
            total += c.num_samples();
        }
        Ok(Some(correct as f64 / total as f64))
    }

    /// `f(x*)` when the minimiser is known.
    pub fn optimum_loss(&self) -> Option<f64> {
        self.optimum.as_ref().and_then(|x| self.loss(x).ok())
    }

    /// Full-batch gradient descent on the global objective with step `1/L`.
    ///
    /// Returns the final iterate, its loss, and the best accuracy seen along
    /// the path (`None` for quadratics).
    pub fn central_reference(&self, iterations: usize) -> Result<CentralReference> {
        let step = 1.0 / self.smoothness_bound.max(f64::MIN_POSITIVE);
        let mut x = ParamVector::zeros(self.dimension);
        let mut best_accuracy = self.accuracy(&x)?;
        for _ in 0..iterations {
            let g = full_gradient(self, &x)?;
            x.axpy(-step, &g)?;
            if let (Some(best), Some(acc)) = (best_accuracy.as_mut(), self.accuracy(&x)?) {
                *best = best.max(acc);
            }
        }
        let loss = self.loss(&x)?;
        Ok(CentralReference { x, loss, best_accuracy })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CentralReference {
    pub x: ParamVector,
    pub loss: f64,
    pub best_accuracy: Option<f64>,
}

/// Exact global gradient `(1/n) Σ ∇f_i(x)`, reduced in client-index order.
pub fn full_gradient(suite: &ProblemSuite, x: &ParamVector) -> Result<ParamVector> {
    x.check_dim(suite.dimension)?;
    let grads = suite
        .clients
        .iter()
        .map(|c| c.gradient(x))
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&ParamVector> = grads.iter().collect();
    Ok(ordered_sum(suite.dimension, &refs)?.scale(1.0 / suite.clients.len() as f64))
}

/// Unbiased stochastic estimate of `∇f_i(x)`.
///
/// Quadratic clients add `N(0, σ²/d)` noise per coordinate; logistic clients
/// average a minibatch drawn uniformly with replacement.
pub fn stochastic_gradient<R: Rng + ?Sized>(
    suite: &ProblemSuite,
    client: usize,
    x: &ParamVector,
    rng: &mut R,
) -> Result<ParamVector> {
    let objective = suite.client(client)?;
    x.check_dim(suite.dimension)?;
    let mut g = match objective {
        ClientObjective::Quadratic { .. } => {
            let mut g = objective.gradient(x)?;
            if suite.noise_sigma > 0.0 {
                let sd = suite.noise_sigma / (suite.dimension as f64).sqrt();
                for v in g.as_mut_slice() {
                    let z: f64 = StandardNormal.sample(rng);
                    *v += sd * z;
                }
            }
            g
        }
        ClientObjective::Logistic { labels, .. } => {
            let rows: Vec<usize> = (0..suite.batch_size)
                .map(|_| rng.random_range(0..labels.len()))
                .collect();
            objective.logistic_batch_gradient(x, &rows)?
        }
    };
    if let Some(limit) = suite.clip_norm {
        let norm = g.norm();
        if norm > limit && limit > 0.0 {
            g = g.scale(limit / norm);
        }
    }
    Ok(g)
}

/// Empirical gradient bound `G`: 1.5 × the largest stochastic gradient norm
/// seen at the origin and at `probes` points on the sphere of radius
/// `probe_radius`, over all clients.
pub fn estimate_grad_bound<R: Rng + ?Sized>(
    suite: &ProblemSuite,
    probe_radius: f64,
    probes: usize,
    rng: &mut R,
) -> Result<f64> {
    if probes == 0 {
        return Err(FedError::config("estimate_grad_bound needs at least one probe"));
    }
    let d = suite.dimension;
    let mut points = vec![ParamVector::zeros(d)];
    if probe_radius > 0.0 {
        for _ in 0..probes {
            let mut dir: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
            let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm == 0.0 {
                dir[0] = 1.0;
            } else {
                dir.iter_mut().for_each(|v| *v *= probe_radius / norm);
            }
            points.push(ParamVector::new(dir));
        }
    }
    // Clipping would cap the estimate at itself.
    let unclipped = ProblemSuite {
        clip_norm: None,
        ..suite.clone()
    };
    let mut max_norm: f64 = 0.0;
    for x in &points {
        for client in 0..suite.num_clients() {
            max_norm = max_norm.max(stochastic_gradient(&unclipped, client, x, rng)?.norm());
        }
    }
    Ok(1.5 * max_norm)
}
