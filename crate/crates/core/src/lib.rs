//! Federated Adam with parameter tracking.
//!
//! A deterministic simulator for federated optimisation with local Adam
//! (AMSGrad) steps and two ways of injecting a tracking correction:
//! estimate tracking (`FAdamET`, correction on the Adam direction) and
//! gradient tracking (`FAdamGT`, correction on the raw gradient), next to the
//! FedAvg, SCAFFOLD, LocalAdam and FedLADA baselines.
//!
//! Modules, bottom-up:
//! * [`paramvec`]: dense vectors and the elementwise primitives;
//! * [`objectives`]: synthetic quadratic and Dirichlet-skewed logistic suites;
//! * [`local_optim`]: the client inner loop;
//! * [`fed_algorithms`]: round sampling, local intervals, aggregation;
//! * [`diagnostics`]: step-size budget, drift terms, rate shapes, fixed-point probe;
//! * [`harness`]: trials, early stopping, communication ledger, sweeps.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod fed_algorithms;
pub mod harness;
pub mod local_optim;
pub mod matrix;
pub mod objectives;
pub mod paramvec;
pub mod seed;

pub use diagnostics::{fixed_point_probe, step_size_budget, DriftReport, ProbeReport, StepSizeBudget};
pub use error::{FedError, Result};
pub use fed_algorithms::{run_round, AlgorithmKind, LocalResult, RoundHyper, RoundPlan, ServerState};
pub use harness::{run_experiment, CommLedger, ExperimentConfig, MetricsRow, SuiteConfig, Target, TargetMetric};
pub use local_optim::{AdamHyper, AdamState, CorrectionMode, TrackingPair};
pub use matrix::DenseMatrix;
pub use objectives::{ClientObjective, ProblemSuite};
pub use paramvec::ParamVector;
