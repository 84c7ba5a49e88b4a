use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::partition::{dirichlet_partition, PartitionSpec};
use super::{estimate_grad_bound, ClientObjective, ProblemSuite};
use crate::error::{FedError, Result};
use crate::matrix::DenseMatrix;
use crate::seed::{self, Domain};

/// Parameters of a label-skewed synthetic logistic-regression suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogisticSuiteSpec {
    pub n: usize,
    pub d: usize,
    pub classes: usize,
    pub samples_per_class: usize,
    pub dirichlet_alpha: f64,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default = "default_l2")]
    pub l2_reg: f64,
    /// Norm scale of the feature noise around each class mean.
    #[serde(default = "default_noise")]
    pub feature_noise: f64,
    /// Ratio of the largest to the smallest per-coordinate noise scale;
    /// scales are log-spaced with geometric mean `feature_noise / √d`.
    /// 1 gives isotropic noise.
    #[serde(default = "default_spread")]
    pub noise_spread: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_batch() -> usize {
    8
}

fn default_l2() -> f64 {
    1e-4
}

fn default_noise() -> f64 {
    1.0
}

fn default_spread() -> f64 {
    1.0
}

/// Smallest allowed angle between class means (45°).
const MIN_COS: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Generates class-conditional Gaussian features around unit-norm class means,
/// labels each sample `class mod 2`, and deals the samples to clients with a
/// per-class Dirichlet split.
pub fn make_dirichlet_logistic_suite(spec: &LogisticSuiteSpec) -> Result<ProblemSuite> {
    if spec.classes < 2 {
        return Err(FedError::config("logistic suite needs at least 2 classes"));
    }
    if spec.samples_per_class == 0 {
        return Err(FedError::config("samples_per_class must be at least 1"));
    }
    if spec.d == 0 || spec.n == 0 {
        return Err(FedError::config("logistic suite needs n >= 1 and d >= 1"));
    }
    if spec.batch_size == 0 {
        return Err(FedError::config("batch_size must be at least 1"));
    }
    if !(spec.feature_noise >= 0.0) || !(spec.l2_reg >= 0.0) {
        return Err(FedError::config("feature_noise and l2_reg must be nonnegative"));
    }
    if !(spec.noise_spread >= 1.0) || !spec.noise_spread.is_finite() {
        return Err(FedError::config(format!(
            "noise_spread must be a finite number >= 1, got {}",
            spec.noise_spread
        )));
    }
    let partition_spec = PartitionSpec {
        dirichlet_alpha: spec.dirichlet_alpha,
        classes: spec.classes,
        seed: spec.seed,
    };
    if !(spec.dirichlet_alpha > 0.0) {
        return Err(FedError::config(format!(
            "dirichlet_alpha must be positive, got {}",
            spec.dirichlet_alpha
        )));
    }

    let d = spec.d;
    let mut rng = seed::stream(spec.seed, Domain::Suite, &[2]);
    let means = class_means(spec.classes, d, &mut rng)?;

    let total = spec.classes * spec.samples_per_class;
    let mut features = Vec::with_capacity(total * d);
    let mut classes = Vec::with_capacity(total);
    let base = spec.feature_noise / (d as f64).sqrt();
    let noise_scale: Vec<f64> = (0..d)
        .map(|j| {
            let u = if d > 1 { j as f64 / (d - 1) as f64 - 0.5 } else { 0.0 };
            base * spec.noise_spread.powf(u)
        })
        .collect();
    for (c, mean) in means.iter().enumerate() {
        for _ in 0..spec.samples_per_class {
            for (m, scale) in mean.iter().zip(&noise_scale) {
                let z: f64 = StandardNormal.sample(&mut rng);
                features.push(m + scale * z);
            }
            classes.push(c);
        }
    }

    let partition = dirichlet_partition(&classes, spec.n, &partition_spec)?;
    let mut clients = Vec::with_capacity(spec.n);
    for shard in &partition.shards {
        let mut rows = Vec::with_capacity(shard.len() * d);
        let mut labels = Vec::with_capacity(shard.len());
        for &s in shard {
            rows.extend_from_slice(&features[s * d..(s + 1) * d]);
            labels.push((classes[s] % 2) as u8);
        }
        clients.push(ClientObjective::logistic(
            DenseMatrix::new(shard.len(), d, rows)?,
            labels,
            spec.l2_reg,
        )?);
    }

    let mut suite = ProblemSuite::from_clients(clients, 0.0, spec.batch_size)?;
    suite.seed = spec.seed;
    suite.noise_sigma = minibatch_sigma_at_origin(&suite);
    let mut probe_rng = seed::stream(spec.seed, Domain::Probe, &[0]);
    suite.grad_bound_estimate = estimate_grad_bound(&suite, 5.0, 16, &mut probe_rng)?;
    Ok(suite)
}

fn class_means<R: rand::Rng + ?Sized>(classes: usize, d: usize, rng: &mut R) -> Result<Vec<Vec<f64>>> {
    const ATTEMPTS: usize = 10_000;
    let mut means: Vec<Vec<f64>> = Vec::with_capacity(classes);
    for _ in 0..ATTEMPTS {
        if means.len() == classes {
            break;
        }
        let mut v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        v.iter_mut().for_each(|x| *x /= norm);
        let separated = means
            .iter()
            .all(|m| m.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>() <= MIN_COS);
        if separated {
            means.push(v);
        }
    }
    if means.len() < classes {
        return Err(FedError::config(format!(
            "cannot place {classes} unit class means 45 degrees apart in dimension {d}"
        )));
    }
    Ok(means)
}

/// `σ` of the minibatch gradient at `x = 0`, maximised over clients:
/// `Var = (1/B) (mean ‖g_j‖² − ‖ḡ‖²)` for sampling with replacement.
fn minibatch_sigma_at_origin(suite: &ProblemSuite) -> f64 {
    let mut worst: f64 = 0.0;
    for c in &suite.clients {
        let ClientObjective::Logistic { features, .. } = c else {
            continue;
        };
        // Per-sample gradient at the origin is -s a / 2; its norm is ‖a‖ / 2.
        let mean_sq = (0..features.rows)
            .map(|r| 0.25 * features.row(r).iter().map(|v| v * v).sum::<f64>())
            .sum::<f64>()
            / features.rows as f64;
        let full = c
            .gradient(&crate::paramvec::ParamVector::zeros(features.cols))
            .map(|g| g.norm_sq())
            .unwrap_or(0.0);
        worst = worst.max((mean_sq - full).max(0.0) / suite.batch_size as f64);
    }
    worst.sqrt()
}
