use serde::{Deserialize, Serialize};

use crate::error::{FedError, Result};
use crate::fed_algorithms::{AlgorithmKind, RoundHyper};
use crate::local_optim::AdamHyper;
use crate::objectives::{
    make_dirichlet_logistic_suite, make_quadratic_suite, LogisticSuiteSpec, ProblemSuite, QuadraticSuiteSpec,
};

/// Objective family and its parameters (the client count `n` lives on
/// [`ExperimentConfig`]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SuiteConfig {
    Quadratic {
        d: usize,
        heterogeneity: f64,
        #[serde(default = "default_mu")]
        mu: f64,
        #[serde(default = "default_l")]
        l_target: f64,
        #[serde(default)]
        noise_sigma: f64,
        #[serde(default)]
        seed: u64,
    },
    Logistic {
        d: usize,
        classes: usize,
        samples_per_class: usize,
        dirichlet_alpha: f64,
        #[serde(default = "default_batch")]
        batch_size: usize,
        #[serde(default = "default_l2")]
        l2_reg: f64,
        #[serde(default = "default_feature_noise")]
        feature_noise: f64,
        #[serde(default = "one")]
        noise_spread: f64,
        #[serde(default)]
        seed: u64,
    },
}

fn default_mu() -> f64 {
    0.1
}
fn default_l() -> f64 {
    1.0
}
fn default_batch() -> usize {
    8
}
fn default_l2() -> f64 {
    1e-4
}
fn default_feature_noise() -> f64 {
    1.0
}

impl SuiteConfig {
    pub fn build(&self, n: usize) -> Result<ProblemSuite> {
        match *self {
            SuiteConfig::Quadratic {
                d,
                heterogeneity,
                mu,
                l_target,
                noise_sigma,
                seed,
            } => make_quadratic_suite(&QuadraticSuiteSpec {
                n,
                d,
                heterogeneity,
                mu,
                l_target,
                noise_sigma,
                seed,
            }),
            SuiteConfig::Logistic {
                d,
                classes,
                samples_per_class,
                dirichlet_alpha,
                batch_size,
                l2_reg,
                feature_noise,
                noise_spread,
                seed,
            } => make_dirichlet_logistic_suite(&LogisticSuiteSpec {
                n,
                d,
                classes,
                samples_per_class,
                dirichlet_alpha,
                batch_size,
                l2_reg,
                feature_noise,
                noise_spread,
                seed,
            }),
        }
    }
}

/// Quantity watched for early stopping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetMetric {
    /// `f(x) <= threshold`
    Loss,
    /// `accuracy >= threshold`
    Accuracy,
    /// `accuracy >= threshold × best full-batch accuracy`
    RelativeAccuracy,
    /// `‖∇f(x)‖² <= threshold`
    GradNormSq,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Target {
    pub metric: TargetMetric,
    pub threshold: f64,
}

/// One experiment: algorithm, problem, and protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub algorithm: AlgorithmKind,
    pub n: usize,
    #[serde(rename = "S")]
    pub s: usize,
    #[serde(rename = "Y", default)]
    pub y: usize,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "T_max")]
    pub t_max: usize,
    /// Defaults to 0.1 for SGD methods and 0.001 for Adam methods.
    #[serde(default)]
    pub eta_l: Option<f64>,
    #[serde(default = "one")]
    pub eta_g: f64,
    #[serde(default = "default_beta1")]
    pub beta1: f64,
    #[serde(default = "default_beta2")]
    pub beta2: f64,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default = "default_alpha_weight")]
    pub alpha_weight: f64,
    #[serde(default)]
    pub target: Option<Target>,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub diagnostics: bool,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "one_usize")]
    pub threads: usize,
    #[serde(default = "default_window")]
    pub smoothing_window: usize,
    #[serde(default)]
    pub clip_gradients: bool,
    /// Full-batch iterations used for the central reference.
    #[serde(default = "default_reference_iters")]
    pub reference_iterations: usize,
    pub suite: SuiteConfig,
}

fn one() -> f64 {
    1.0
}
fn one_usize() -> usize {
    1
}
fn default_beta1() -> f64 {
    0.9
}
fn default_beta2() -> f64 {
    0.99
}
fn default_eps() -> f64 {
    1e-8
}
fn default_alpha_weight() -> f64 {
    0.5
}
fn default_trials() -> usize {
    4
}
fn default_window() -> usize {
    3
}
fn default_reference_iters() -> usize {
    2000
}

impl ExperimentConfig {
    /// Protocol defaults: `n = 100`, 10% sampling, `Y = S/2`, `K = 3`,
    /// `(β₁, β₂) = (0.9, 0.99)`, `ε = 1e-8`, `η_g = 1`, four trials.
    pub fn with_defaults(algorithm: AlgorithmKind, suite: SuiteConfig) -> Self {
        ExperimentConfig {
            algorithm,
            n: 100,
            s: 10,
            y: 5,
            k: 3,
            t_max: 500,
            eta_l: None,
            eta_g: 1.0,
            beta1: default_beta1(),
            beta2: default_beta2(),
            eps: default_eps(),
            alpha_weight: default_alpha_weight(),
            target: None,
            master_seed: 0,
            diagnostics: false,
            trials: default_trials(),
            threads: 1,
            smoothing_window: default_window(),
            clip_gradients: false,
            reference_iterations: default_reference_iters(),
            suite,
        }
    }

    pub fn eta_l(&self) -> f64 {
        self.eta_l.unwrap_or_else(|| self.algorithm.default_eta_l())
    }

    pub fn adam(&self) -> AdamHyper {
        AdamHyper {
            beta1: self.beta1,
            beta2: self.beta2,
            eps: self.eps,
        }
    }

    pub fn round_hyper(&self) -> RoundHyper {
        RoundHyper {
            participants: self.s,
            trackers: self.y,
            local_steps: self.k,
            eta_l: self.eta_l(),
            eta_g: self.eta_g,
            adam: self.adam(),
            alpha_weight: self.alpha_weight,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(FedError::config("n must be at least 1"));
        }
        if self.s == 0 || self.s > self.n {
            return Err(FedError::config(format!(
                "S must satisfy 1 <= S <= n (S={}, n={})",
                self.s, self.n
            )));
        }
        if self.y > self.s {
            return Err(FedError::config(format!(
                "Y must satisfy Y <= S (Y={}, S={})",
                self.y, self.s
            )));
        }
        if self.t_max == 0 {
            return Err(FedError::config("T_max must be at least 1"));
        }
        if self.trials == 0 {
            return Err(FedError::config("trials must be at least 1"));
        }
        if self.threads == 0 {
            return Err(FedError::config("threads must be at least 1"));
        }
        if self.smoothing_window == 0 || self.smoothing_window.is_multiple_of(2) {
            return Err(FedError::config("smoothing_window must be a positive odd number"));
        }
        if let Some(t) = &self.target {
            if !t.threshold.is_finite() {
                return Err(FedError::config("target threshold must be finite"));
            }
            let logistic = matches!(self.suite, SuiteConfig::Logistic { .. });
            if matches!(t.metric, TargetMetric::Accuracy | TargetMetric::RelativeAccuracy) && !logistic {
                return Err(FedError::config("accuracy targets need a logistic suite"));
            }
        }
        self.round_hyper().validate(self.n)
    }
}
