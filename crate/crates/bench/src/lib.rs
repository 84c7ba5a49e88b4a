//! Shared fixtures for the benchmarks.

use fedpt_core::objectives::{
    make_dirichlet_logistic_suite, make_quadratic_suite, LogisticSuiteSpec, QuadraticSuiteSpec,
};
use fedpt_core::{AdamHyper, ProblemSuite, RoundHyper};

/// 100-client label-skewed logistic suite at the protocol sizes.
pub fn logistic_suite(dirichlet_alpha: f64) -> ProblemSuite {
    make_dirichlet_logistic_suite(&LogisticSuiteSpec {
        n: 100,
        d: 50,
        classes: 5,
        samples_per_class: 200,
        dirichlet_alpha,
        batch_size: 8,
        l2_reg: 1e-4,
        feature_noise: 1.0,
        noise_spread: 100.0,
        seed: 0,
    })
    .expect("logistic fixture")
}

pub fn quadratic_suite(n: usize, d: usize) -> ProblemSuite {
    make_quadratic_suite(&QuadraticSuiteSpec {
        n,
        d,
        heterogeneity: 1.0,
        mu: 0.1,
        l_target: 1.0,
        noise_sigma: 0.1,
        seed: 0,
    })
    .expect("quadratic fixture")
}

/// 10% participation, half of the participants tracking, three local steps.
pub fn protocol_hyper(eta_l: f64) -> RoundHyper {
    RoundHyper {
        participants: 10,
        trackers: 5,
        local_steps: 3,
        eta_l,
        eta_g: 1.0,
        adam: AdamHyper::default(),
        alpha_weight: 0.5,
    }
}
