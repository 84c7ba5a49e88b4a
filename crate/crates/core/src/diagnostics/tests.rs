use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::local_optim::AdamHyper;
use crate::matrix::DenseMatrix;
use crate::objectives::{make_quadratic_suite, two_client_symmetric, ClientObjective, QuadraticSuiteSpec};

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs()
}

fn probe_hyper(alpha_weight: f64) -> RoundHyper {
    RoundHyper {
        participants: 2,
        trackers: 2,
        local_steps: 3,
        eta_l: 1e-3,
        eta_g: 1.0,
        adam: AdamHyper::default(),
        alpha_weight,
    }
}

fn one_d_suite(centers: &[f64]) -> ProblemSuite {
    let clients = centers
        .iter()
        .map(|&b| ClientObjective::quadratic(DenseMatrix::identity(1), ParamVector::new(vec![b]), 1.0).unwrap())
        .collect();
    ProblemSuite::from_clients(clients, 0.0, 1).unwrap()
}

#[test]
fn budget_hand_example() {
    let b = step_size_budget(1.0, 1.0, 3, 100, 10, 0.9, 1e-8).unwrap();
    let mix = (1.0 - 0.9) * 0.9;
    assert!(rel_close(b.combined_terms[0], mix / (24.0 * (1.0 + 1e-8)), 1e-12));
    assert!(rel_close(b.combined_terms[1], 1.0 / 24.0, 1e-12));
    assert!(rel_close(b.combined_terms[2], 1.0 / 1200.0, 1e-12));
    assert!(rel_close(b.combined_terms[3], 0.1f64.sqrt(), 1e-12));
    assert!(rel_close(b.combined_cap, 1.0 / 1200.0, 1e-12));
    assert!(rel_close(b.local_cap_gt, 1.0 / 12000.0, 1e-12));
    assert!(b.local_cap_et <= b.local_cap_gt);
}

#[test]
fn budget_rejects_bad_inputs() {
    assert!(step_size_budget(0.0, 1.0, 3, 100, 10, 0.9, 1e-8).is_err());
    assert!(step_size_budget(1.0, -1.0, 3, 100, 10, 0.9, 1e-8).is_err());
    assert!(step_size_budget(1.0, 1.0, 0, 100, 10, 0.9, 1e-8).is_err());
    assert!(step_size_budget(1.0, 1.0, 3, 100, 10, 1.0, 1e-8).is_err());
    assert!(step_size_budget(1.0, 1.0, 3, 100, 10, 0.9, 0.0).is_err());
}

#[test]
fn budget_is_monotone_on_grid() {
    let ts = [1usize, 10, 100, 1000, 10_000];
    let ks = [1usize, 2, 4, 8, 16];
    let ls = [0.1, 0.5, 1.0, 5.0, 25.0];
    let caps = |t, k, l| {
        let b = step_size_budget(2.0, l, k, t, 10, 0.9, 1e-8).unwrap();
        [b.combined_cap, b.local_cap_gt, b.local_cap_et]
    };
    let le = |a: [f64; 3], b: [f64; 3]| a.iter().zip(b).all(|(x, y)| *x <= y);
    for &t in &ts {
        for &k in &ks {
            for w in ls.windows(2) {
                assert!(le(caps(t, k, w[1]), caps(t, k, w[0])));
            }
        }
        for &l in &ls {
            for w in ks.windows(2) {
                assert!(le(caps(t, w[1], l), caps(t, w[0], l)));
            }
        }
    }
    for &k in &ks {
        for &l in &ls {
            for w in ts.windows(2) {
                assert!(le(caps(w[1], k, l), caps(w[0], k, l)));
            }
        }
    }
}

#[test]
fn c_weights_follow_definition() {
    assert!(rel_close(c_weight(0.9, 1, 1), 0.1, 1e-15));
    assert!(rel_close(c_weight(0.9, 3, 1), 0.1 * 0.81, 1e-14));
    let table = c_weights(0.5, 4);
    assert_eq!(table.len(), 4);
    assert_eq!(table[3], vec![0.0625, 0.125, 0.25, 0.5]);
    for beta1 in [0.5f64, 0.9, 0.99] {
        for k in 1..=100 {
            let closed = 1.0 - beta1.powi(k as i32);
            let total = c_total(beta1, k);
            assert!((total - closed).abs() <= 1e-12, "beta1 {beta1} k {k}");
            // 1 - c^k = beta1^k, which drops below f64 resolution near 1
            assert!(total <= 1.0 && beta1.powi(k as i32) > 0.0);
            if k >= 2 {
                assert!(total >= (1.0 - beta1) * beta1);
            }
        }
    }
}

#[test]
fn xi_vanishes_without_local_movement() {
    let suite = make_quadratic_suite(&QuadraticSuiteSpec {
        n: 3,
        d: 2,
        heterogeneity: 1.0,
        mu: 0.1,
        l_target: 1.0,
        noise_sigma: 0.0,
        seed: 1,
    })
    .unwrap();
    let x = ParamVector::new(vec![0.3, -0.2]);
    let streams: BTreeMap<usize, Vec<ParamVector>> = (0..3).map(|i| (i, vec![x.clone(); 4])).collect();
    assert_eq!(measure_xi(&suite, &streams, &x, 0.9).unwrap(), 0.0);
    assert_eq!(measure_cal_e(&suite, &streams, &x, 0.9).unwrap(), 0.0);
    assert_eq!(measure_xi(&suite, &BTreeMap::new(), &x, 0.9).unwrap(), 0.0);
}

#[test]
fn xi_single_step_is_zero() {
    let suite = two_client_symmetric();
    let x = ParamVector::new(vec![0.7]);
    let streams = BTreeMap::from([(0, vec![x.clone()])]);
    assert_eq!(measure_xi(&suite, &streams, &x, 0.9).unwrap(), 0.0);
}

#[test]
fn xi_two_step_example() {
    // f_1 = ½(x-1)², x^(t) = 0, x^(t,2) = 0.5: only k = 2 contributes,
    // ‖c^(2,2)(∇f(0.5) − ∇f(0))‖² = (0.1 · 0.5)²
    let suite = two_client_symmetric();
    let x = ParamVector::zeros(1);
    let streams = BTreeMap::from([(0, vec![x.clone(), ParamVector::new(vec![0.5])])]);
    let xi = measure_xi(&suite, &streams, &x, 0.9).unwrap();
    assert!((xi - 0.0025).abs() < 1e-15);
}

#[test]
fn xi_respects_deviation_bound_on_a_run() {
    let suite = make_quadratic_suite(&QuadraticSuiteSpec {
        n: 4,
        d: 3,
        heterogeneity: 1.0,
        mu: 0.1,
        l_target: 1.0,
        noise_sigma: 0.0,
        seed: 2,
    })
    .unwrap();
    let hyper = RoundHyper {
        participants: 4,
        trackers: 2,
        local_steps: 4,
        eta_l: 0.01,
        eta_g: 1.0,
        adam: AdamHyper::default(),
        alpha_weight: 0.5,
    };
    let mut server = ServerState::new(ParamVector::zeros(3), 4);
    for _ in 0..20 {
        let x_ref = server.x.clone();
        let outcome = run_round(&mut server, &suite, AlgorithmKind::FAdamGT, &hyper, 0, 0, None).unwrap();
        let mut streams = BTreeMap::new();
        let mut g_max: f64 = 0.0;
        for (c, r) in &outcome.results {
            let iterates = r.iterates[..hyper.local_steps].to_vec();
            for x in &iterates {
                g_max = g_max.max(suite.client_gradient(*c, x).unwrap().norm());
            }
            streams.insert(*c, iterates);
        }
        let xi = measure_xi(&suite, &streams, &x_ref, 0.9).unwrap();
        let bound = xi_bound(4, suite.smoothness_bound, 0.01, g_max, 1e-8, 0.0);
        assert!(xi >= 0.0 && xi <= bound, "{xi} > {bound}");
    }
}

#[test]
fn gamma_examples() {
    let suite = make_quadratic_suite(&QuadraticSuiteSpec {
        n: 3,
        d: 2,
        heterogeneity: 2.0,
        mu: 0.1,
        l_target: 1.0,
        noise_sigma: 0.0,
        seed: 3,
    })
    .unwrap();
    let x = ParamVector::new(vec![0.5, 1.0]);
    let k = 3;
    let exact: Vec<Vec<ParamVector>> = (0..3).map(|i| vec![suite.client_gradient(i, &x).unwrap(); k]).collect();
    assert_eq!(measure_gamma(&exact, &suite, &x).unwrap(), 0.0);

    let zeros = vec![vec![ParamVector::zeros(2); k]; 3];
    let expected: f64 = (0..3)
        .map(|i| {
            let g = suite.client_gradient(i, &x).unwrap();
            g.as_slice().iter().map(|v| v * v).sum::<f64>()
        })
        .sum::<f64>()
        / 3.0;
    let gamma = measure_gamma(&zeros, &suite, &x).unwrap();
    assert!((gamma - expected).abs() <= 1e-14 * expected);
    assert!(measure_gamma(&zeros[..2], &suite, &x).is_err());
}

#[test]
fn gamma_is_label_permutation_invariant() {
    let centers = [1.0, -2.0, 0.5];
    let suite = one_d_suite(&centers);
    let permuted = one_d_suite(&[centers[2], centers[0], centers[1]]);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let snaps: Vec<Vec<ParamVector>> = (0..3)
        .map(|_| {
            (0..4)
                .map(|_| ParamVector::new(vec![rng.random_range(-2.0..2.0)]))
                .collect()
        })
        .collect();
    let snaps_p = vec![snaps[2].clone(), snaps[0].clone(), snaps[1].clone()];
    let x = ParamVector::new(vec![0.25]);
    let a = measure_gamma(&snaps, &suite, &x).unwrap();
    let b = measure_gamma(&snaps_p, &permuted, &x).unwrap();
    assert!((a - b).abs() <= 1e-14 * a);
}

#[test]
fn rate_examples() {
    let gt = theoretical_rate(RateKind::GradientTracking, 1.0, 1, 1, 1, 5, 10).unwrap();
    assert_eq!(gt, 3.0);
    let (k, s, t, y, n) = (3, 10, 50, 5, 100);
    let gt = theoretical_rate(RateKind::GradientTracking, 2.0, k, s, t, y, n).unwrap();
    let et = theoretical_rate(RateKind::EstimateTracking, 2.0, k, s, t, y, n).unwrap();
    assert!(((et - gt) - (5.0 * 9.0) / (100.0 * 50.0)).abs() < 1e-15);
    let mut last = f64::INFINITY;
    for t in 2..200 {
        let r = theoretical_rate(RateKind::EstimateTracking, 2.0, 3, 10, t, 5, 100).unwrap();
        assert!(r < last);
        last = r;
    }
    assert!(theoretical_rate(RateKind::GradientTracking, 1.0, 0, 1, 1, 0, 1).is_err());
}

#[test]
fn tracking_methods_hold_the_fixed_point() {
    let suite = two_client_symmetric();
    for kind in [AlgorithmKind::FAdamGT, AlgorithmKind::Scaffold] {
        let r = fixed_point_probe(kind, &suite, 100, &probe_hyper(0.5)).unwrap();
        assert!(r.max_drift() <= 1e-9, "{kind}: {r:?}");
    }
}

#[test]
fn local_adam_leaves_the_fixed_point() {
    let suite = two_client_symmetric();
    let r = fixed_point_probe(AlgorithmKind::LocalAdam, &suite, 1, &probe_hyper(0.5)).unwrap();
    assert!(r.max_drift() >= 5e-4, "{r:?}");

    // asymmetric clients: the aggregate itself moves
    let suite = one_d_suite(&[2.0, -1.0, -1.0]);
    assert_eq!(suite.optimum.as_ref().unwrap().as_slice(), &[0.0]);
    let r = fixed_point_probe(AlgorithmKind::LocalAdam, &suite, 1, &probe_hyper(0.5)).unwrap();
    assert!(r.global_drift >= 0.5 * 1e-3, "{r:?}");
}

#[test]
fn fedlada_drift_depends_on_weight() {
    let suite = two_client_symmetric();
    for alpha in [0.25, 0.5, 1.0] {
        let r = fixed_point_probe(AlgorithmKind::FedLada, &suite, 100, &probe_hyper(alpha)).unwrap();
        assert!(r.max_drift() > 1e-6, "alpha {alpha}: {r:?}");
    }
    let r = fixed_point_probe(AlgorithmKind::FedLada, &suite, 100, &probe_hyper(0.0)).unwrap();
    assert!(r.max_drift() <= 1e-9);
}

#[test]
fn probe_rejects_unsuitable_suites() {
    let noisy = make_quadratic_suite(&QuadraticSuiteSpec {
        n: 2,
        d: 2,
        heterogeneity: 1.0,
        mu: 0.1,
        l_target: 1.0,
        noise_sigma: 0.1,
        seed: 0,
    })
    .unwrap();
    let err = fixed_point_probe(AlgorithmKind::FAdamGT, &noisy, 5, &probe_hyper(0.5)).unwrap_err();
    assert!(err.is_config());
}
