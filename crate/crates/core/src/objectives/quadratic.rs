use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{estimate_grad_bound, ClientObjective, ProblemSuite};
use crate::error::{FedError, Result};
use crate::matrix::DenseMatrix;
use crate::paramvec::ParamVector;
use crate::seed::{self, Domain};

/// Parameters of a synthetic quadratic suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadraticSuiteSpec {
    pub n: usize,
    pub d: usize,
    /// Distance of every client center from the shared center.
    pub heterogeneity: f64,
    pub mu: f64,
    pub l_target: f64,
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default)]
    pub seed: u64,
}

/// Builds `n` quadratics sharing one curvature `A` with spectrum in
/// `[mu, l_target]`, centered at `b_i = c + heterogeneity · u_i` where `c` is
/// a shared random center and `u_i` are random unit directions.
pub fn make_quadratic_suite(spec: &QuadraticSuiteSpec) -> Result<ProblemSuite> {
    let QuadraticSuiteSpec {
        n,
        d,
        heterogeneity,
        mu,
        l_target,
        noise_sigma,
        seed,
    } = *spec;
    if n == 0 || d == 0 {
        return Err(FedError::config("quadratic suite needs n >= 1 and d >= 1"));
    }
    if !(mu > 0.0) || !(mu <= l_target) {
        return Err(FedError::config(format!(
            "need 0 < mu <= L_target, got mu={mu}, L_target={l_target}"
        )));
    }
    if !(heterogeneity >= 0.0) || !(noise_sigma >= 0.0) {
        return Err(FedError::config("heterogeneity and noise_sigma must be nonnegative"));
    }

    let mut rng = seed::stream(seed, Domain::Suite, &[0]);
    let mut normal = move || -> f64 { StandardNormal.sample(&mut rng) };

    // Spectrum pinned at both ends so L and mu are attained exactly.
    let mut eigenvalues: Vec<f64> = vec![l_target; d];
    if d > 1 {
        eigenvalues[d - 1] = mu;
        for ev in eigenvalues.iter_mut().take(d - 1).skip(1) {
            let u = 0.5 * (1.0 + (normal() / 3.0).tanh());
            *ev = mu + (l_target - mu) * u;
        }
    }
    let gaussian = DMatrix::from_fn(d, d, |_, _| normal());
    let q = gaussian.qr().q();
    let a = &q * DMatrix::from_diagonal(&DVector::from_vec(eigenvalues)) * q.transpose();
    let a = (&a + a.transpose()) * 0.5;
    let curvature = DenseMatrix::from_nalgebra(&a);

    let shared: Vec<f64> = (0..d).map(|_| normal()).collect();
    let mut clients = Vec::with_capacity(n);
    for _ in 0..n {
        let mut u: Vec<f64> = (0..d).map(|_| normal()).collect();
        let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
        u.iter_mut().for_each(|v| *v /= norm);
        let center = shared.iter().zip(&u).map(|(c, uj)| c + heterogeneity * uj).collect();
        clients.push(ClientObjective::quadratic(
            curvature.clone(),
            ParamVector::new(center),
            mu,
        )?);
    }

    let mut suite = ProblemSuite::from_clients(clients, noise_sigma, 1)?;
    suite.seed = seed;
    suite.smoothness_bound = suite.smoothness_bound.max(l_target);
    let radius = 1.0
        + suite
            .clients
            .iter()
            .map(|c| match c {
                ClientObjective::Quadratic { center, .. } => center.norm(),
                _ => 0.0,
            })
            .fold(0.0, f64::max);
    let mut probe_rng = seed::stream(seed, Domain::Probe, &[0]);
    suite.grad_bound_estimate = estimate_grad_bound(&suite, radius, 32, &mut probe_rng)?;
    Ok(suite)
}

/// `x* = (Σ A_i)⁻¹ Σ A_i b_i`.
pub(super) fn closed_form_optimum(clients: &[ClientObjective]) -> Result<ParamVector> {
    let d = clients[0].dim();
    let mut sum_a = DMatrix::<f64>::zeros(d, d);
    let mut sum_ab = DVector::<f64>::zeros(d);
    for c in clients {
        let ClientObjective::Quadratic { curvature, center } = c else {
            return Err(FedError::config("closed-form optimum needs quadratic clients"));
        };
        let a = curvature.to_nalgebra();
        let b = DVector::from_column_slice(center.as_slice());
        sum_ab += &a * b;
        sum_a += a;
    }
    let chol = sum_a
        .cholesky()
        .ok_or_else(|| FedError::domain("sum of curvatures is not positive definite"))?;
    Ok(ParamVector::from_nalgebra(&chol.solve(&sum_ab)))
}

/// The two-client 1-D suite `f₁ = ½(x−1)²`, `f₂ = ½(x+1)²` with `x* = 0`.
pub fn two_client_symmetric() -> ProblemSuite {
    let make = |b: f64| {
        ClientObjective::quadratic(DenseMatrix::identity(1), ParamVector::new(vec![b]), 1.0).expect("unit curvature")
    };
    let mut suite = ProblemSuite::from_clients(vec![make(1.0), make(-1.0)], 0.0, 1).expect("valid");
    let mut rng = seed::stream(0, Domain::Probe, &[0]);
    suite.grad_bound_estimate = estimate_grad_bound(&suite, 1.0, 2, &mut rng).expect("probes");
    suite
}
