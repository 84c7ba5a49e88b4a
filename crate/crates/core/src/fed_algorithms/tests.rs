use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::objectives::{
    make_dirichlet_logistic_suite, make_quadratic_suite, two_client_symmetric, ClientObjective, LogisticSuiteSpec,
    QuadraticSuiteSpec,
};

const NOISE: NoiseKey = NoiseKey {
    master_seed: 11,
    trial: 0,
    round: 1,
};

fn hyper(s: usize, y: usize, k: usize, eta_l: f64) -> RoundHyper {
    RoundHyper {
        participants: s,
        trackers: y,
        local_steps: k,
        eta_l,
        eta_g: 1.0,
        adam: AdamHyper::default(),
        alpha_weight: 0.5,
    }
}

fn quadratic(n: usize, heterogeneity: f64, noise_sigma: f64) -> ProblemSuite {
    make_quadratic_suite(&QuadraticSuiteSpec {
        n,
        d: 4,
        heterogeneity,
        mu: 0.1,
        l_target: 1.0,
        noise_sigma,
        seed: 5,
    })
    .unwrap()
}

fn logistic() -> ProblemSuite {
    make_dirichlet_logistic_suite(&LogisticSuiteSpec {
        n: 12,
        d: 6,
        classes: 4,
        samples_per_class: 20,
        dirichlet_alpha: 0.3,
        batch_size: 4,
        l2_reg: 1e-3,
        feature_noise: 1.0,
        noise_spread: 1.0,
        seed: 2,
    })
    .unwrap()
}

fn run_rounds(
    suite: &ProblemSuite,
    kind: AlgorithmKind,
    h: &RoundHyper,
    rounds: usize,
    pool: Option<&rayon::ThreadPool>,
) -> ServerState {
    let mut server = ServerState::new(ParamVector::zeros(suite.dimension), suite.num_clients());
    for _ in 0..rounds {
        run_round(&mut server, suite, kind, h, 3, 0, pool).unwrap();
    }
    server
}

#[test]
fn algorithm_names_round_trip() {
    for kind in [
        AlgorithmKind::FedAvg,
        AlgorithmKind::Scaffold,
        AlgorithmKind::LocalAdam,
        AlgorithmKind::FedLada,
        AlgorithmKind::FAdamET,
        AlgorithmKind::FAdamGT,
    ] {
        assert_eq!(kind.name().parse::<AlgorithmKind>().unwrap(), kind);
    }
    assert!("adam".parse::<AlgorithmKind>().unwrap_err().is_config());
}

#[test]
fn sample_round_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let plan = sample_round(5, 5, 2, &mut rng).unwrap();
    assert_eq!(plan.participants, vec![0, 1, 2, 3, 4]);
    assert_eq!(plan.trackers.len(), 2);
    assert!(plan.trackers.windows(2).all(|w| w[0] < w[1]));
    assert!(sample_round(5, 3, 0, &mut rng).unwrap().trackers.is_empty());
    assert!(sample_round(5, 0, 0, &mut rng).unwrap_err().is_config());
    assert!(sample_round(5, 6, 0, &mut rng).unwrap_err().is_config());
    assert!(sample_round(5, 3, 4, &mut rng).unwrap_err().is_config());
}

#[test]
fn sample_round_inclusion_is_uniform() {
    let (n, s, y, draws) = (10, 3, 2, 10_000);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut part = [0usize; 10];
    let mut track = [0usize; 10];
    for _ in 0..draws {
        let plan = sample_round(n, s, y, &mut rng).unwrap();
        assert!(plan.trackers.iter().all(|t| plan.participants.contains(t)));
        for &c in &plan.participants {
            part[c] += 1;
        }
        for &c in &plan.trackers {
            track[c] += 1;
        }
    }
    let check = |counts: &[usize], p: f64| {
        let tol = 4.0 * (p * (1.0 - p) / draws as f64).sqrt();
        for &c in counts {
            assert!((c as f64 / draws as f64 - p).abs() <= tol, "{c} vs {p}");
        }
    };
    check(&part, 0.3);
    check(&track, 0.2);
}

#[test]
fn single_adam_step_moves_toward_client_optimum() {
    // f_1 = ½(x-1)², x0 = 0: g = -1, m = -0.1, v = v̂ = 0.01
    let suite = two_client_symmetric();
    let zero = ParamVector::zeros(1);
    let tracking = TrackingPair {
        y_global: &zero,
        y_local: &zero,
    };
    let eta_l = 1e-3;
    let r = run_local_interval(
        &suite,
        0,
        &zero,
        tracking,
        CarriedMoments::zeros(1),
        1,
        eta_l,
        AdamHyper::default(),
        CorrectionMode::None,
        false,
        NOISE,
    )
    .unwrap();
    let expected = eta_l * 0.1 / (0.01f64.sqrt() + 1e-8);
    assert!((r.model_delta[0] - expected).abs() < 1e-15);
    assert!((r.model_delta[0] - eta_l).abs() < 1e-9);
    assert_eq!(r.moments.v.as_slice(), &[1.0 - 0.99]);
    assert_eq!(r.iterates.len(), 2);
    assert!(r.tracking_update.is_none());
}

#[test]
fn gradient_tracking_is_stationary_at_optimum() {
    let suite = two_client_symmetric();
    let x_star = ParamVector::zeros(1);
    let y = ParamVector::zeros(1);
    for client in 0..2 {
        let y_i = suite.client_gradient(client, &x_star).unwrap();
        let tracking = TrackingPair {
            y_global: &y,
            y_local: &y_i,
        };
        let r = run_local_interval(
            &suite,
            client,
            &x_star,
            tracking,
            CarriedMoments::zeros(1),
            5,
            1e-3,
            AdamHyper::default(),
            CorrectionMode::GradientTracking,
            true,
            NOISE,
        )
        .unwrap();
        assert_eq!(r.model_delta.as_slice(), &[0.0]);
        assert_eq!(r.tracking_update.unwrap().as_slice(), &[0.0]);
    }
}

#[test]
fn estimate_refresh_equals_mean_direction() {
    let suite = quadratic(4, 1.0, 0.3);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut draw = || ParamVector::new((0..4).map(|_| rand::Rng::random_range(&mut rng, -1.0..1.0)).collect());
    let (x0, y, y_i) = (draw(), draw(), draw());
    let tracking = TrackingPair {
        y_global: &y,
        y_local: &y_i,
    };
    let r = run_local_interval(
        &suite,
        2,
        &x0,
        tracking,
        CarriedMoments::zeros(4),
        6,
        0.05,
        AdamHyper::default(),
        CorrectionMode::EstimateTracking,
        true,
        NOISE,
    )
    .unwrap();
    let refreshed = y_i.add(r.tracking_update.as_ref().unwrap()).unwrap();
    let refs: Vec<&ParamVector> = r.directions.iter().collect();
    let mean_dir = ordered_sum(4, &refs).unwrap().scale(1.0 / 6.0);
    let scale = mean_dir.max_abs().max(1.0);
    assert!(refreshed.dist(&mean_dir).unwrap() <= 1e-12 * scale);
}

#[test]
fn local_adam_cannot_refresh() {
    let suite = two_client_symmetric();
    let zero = ParamVector::zeros(1);
    let tracking = TrackingPair {
        y_global: &zero,
        y_local: &zero,
    };
    let err = run_local_interval(
        &suite,
        0,
        &zero,
        tracking,
        CarriedMoments::zeros(1),
        1,
        1e-3,
        AdamHyper::default(),
        CorrectionMode::None,
        true,
        NOISE,
    )
    .unwrap_err();
    assert!(matches!(err, FedError::Protocol(_)));
}

fn result_with(client: usize, delta: Vec<f64>, update: Option<Vec<f64>>) -> LocalResult {
    let d = delta.len();
    LocalResult {
        client,
        model_delta: ParamVector::new(delta),
        tracking_update: update.map(ParamVector::new),
        moments: CarriedMoments::zeros(d),
        grad_mean: ParamVector::zeros(d),
        steps: 1,
        iterates: Vec::new(),
        directions: Vec::new(),
    }
}

#[test]
fn model_aggregation_example() {
    let mut server = ServerState::new(ParamVector::new(vec![1.0, 2.0]), 3);
    let plan = RoundPlan {
        participants: vec![0, 2],
        trackers: vec![],
    };
    let mut results = BTreeMap::new();
    results.insert(0, result_with(0, vec![1.0, 0.0], None));
    results.insert(2, result_with(2, vec![0.0, 2.0], None));
    aggregate_models(&mut server, &results, &plan, 0.5).unwrap();
    assert_eq!(server.x.as_slice(), &[1.25, 2.5]);

    results.remove(&2);
    results.insert(1, result_with(1, vec![0.0, 0.0], None));
    let err = aggregate_models(&mut server, &results, &plan, 0.5).unwrap_err();
    assert!(matches!(err, FedError::Protocol(_)));
}

#[test]
fn tracking_aggregation_example() {
    let mut server = ServerState::new(ParamVector::zeros(1), 4);
    let plan = RoundPlan {
        participants: vec![1, 3],
        trackers: vec![1],
    };
    let mut results = BTreeMap::new();
    results.insert(1, result_with(1, vec![0.0], Some(vec![4.0])));
    results.insert(3, result_with(3, vec![0.0], None));
    aggregate_tracking(&mut server, &results, &plan, 4).unwrap();
    assert_eq!(server.y.as_slice(), &[1.0]);
    assert_eq!(server.y_client[1].as_slice(), &[4.0]);
    assert_eq!(server.y_client[3].as_slice(), &[0.0]);

    let mut stray = results.clone();
    stray.insert(3, result_with(3, vec![0.0], Some(vec![1.0])));
    assert!(matches!(
        aggregate_tracking(&mut server, &stray, &plan, 4),
        Err(FedError::Protocol(_))
    ));
    let mut missing = results;
    missing.insert(1, result_with(1, vec![0.0], None));
    assert!(matches!(
        aggregate_tracking(&mut server, &missing, &plan, 4),
        Err(FedError::Protocol(_))
    ));
}

#[test]
fn tracking_mean_is_preserved() {
    let suite = quadratic(10, 2.0, 0.2);
    for kind in [AlgorithmKind::FAdamET, AlgorithmKind::FAdamGT, AlgorithmKind::Scaffold] {
        let h = hyper(4, 2, 3, 0.01);
        let mut server = ServerState::new(ParamVector::zeros(4), 10);
        for _ in 0..30 {
            run_round(&mut server, &suite, kind, &h, 1, 0, None).unwrap();
            let gap = server.tracking_mean_gap().unwrap();
            assert!(gap.max_abs() <= 1e-12, "{kind}: {gap:?}");
        }
        assert!(server.y.max_abs() > 0.0);
    }
}

#[test]
fn fedavg_single_step_full_participation_is_gradient_descent() {
    let suite = quadratic(6, 1.5, 0.0);
    let h = hyper(6, 0, 1, 0.3);
    let mut server = ServerState::new(ParamVector::zeros(4), 6);
    let mut oracle = ParamVector::zeros(4);
    for _ in 0..10 {
        run_round(&mut server, &suite, AlgorithmKind::FedAvg, &h, 0, 0, None).unwrap();
        let mut mean_grad = ParamVector::zeros(4);
        for c in &suite.clients {
            let ClientObjective::Quadratic { curvature, center } = c else {
                unreachable!()
            };
            for r in 0..4 {
                let row: f64 = (0..4)
                    .map(|j| curvature.data[r * 4 + j] * (oracle[j] - center[j]))
                    .sum();
                mean_grad.as_mut_slice()[r] += row / 6.0;
            }
        }
        oracle.axpy(-0.3, &mean_grad).unwrap();
        assert!(server.x.dist(&oracle).unwrap() <= 1e-12);
    }
}

#[test]
fn tracking_is_inert_on_homogeneous_clients() {
    let suite = quadratic(4, 0.0, 0.0);
    let h = hyper(4, 4, 3, 0.01);
    let base = run_rounds(&suite, AlgorithmKind::LocalAdam, &h, 15, None);
    for kind in [AlgorithmKind::FAdamGT, AlgorithmKind::FAdamET] {
        let tracked = run_rounds(&suite, kind, &h, 15, None);
        assert!(tracked.x.dist(&base.x).unwrap() <= 1e-12, "{kind}");
    }
}

#[test]
fn first_scaffold_round_matches_fedavg() {
    let suite = quadratic(8, 1.0, 0.5);
    let h = hyper(3, 0, 4, 0.05);
    let a = run_rounds(&suite, AlgorithmKind::FedAvg, &h, 1, None);
    let b = run_rounds(&suite, AlgorithmKind::Scaffold, &h, 1, None);
    assert_eq!(a.x, b.x);
    assert!(b.y.max_abs() > 0.0);
}

#[test]
fn fedlada_with_unit_weight_is_local_adam() {
    let suite = quadratic(8, 1.0, 0.5);
    let mut h = hyper(3, 0, 4, 0.01);
    h.alpha_weight = 1.0;
    let a = run_rounds(&suite, AlgorithmKind::LocalAdam, &h, 8, None);
    let b = run_rounds(&suite, AlgorithmKind::FedLada, &h, 8, None);
    assert_eq!(a.x, b.x);
    assert!(b.g_alpha.max_abs() > 0.0);
}

#[test]
fn non_participants_keep_their_state() {
    let suite = quadratic(10, 1.0, 0.1);
    let h = hyper(3, 2, 2, 0.01);
    let mut server = ServerState::new(ParamVector::zeros(4), 10);
    let before = server.clone();
    let out = run_round(&mut server, &suite, AlgorithmKind::FAdamGT, &h, 7, 0, None).unwrap();
    for c in 0..10 {
        if out.plan.participants.contains(&c) {
            assert!(server.moments[c].v_hat.max_abs() > 0.0);
        } else {
            assert_eq!(server.moments[c], before.moments[c]);
        }
        if !out.plan.trackers.contains(&c) {
            assert_eq!(server.y_client[c], before.y_client[c]);
        }
    }
    assert_eq!(server.round, 2);
    assert_eq!(out.round, 1);
}

#[test]
fn parallel_rounds_are_bit_identical() {
    let suite = logistic();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    for kind in [
        AlgorithmKind::FAdamGT,
        AlgorithmKind::FAdamET,
        AlgorithmKind::Scaffold,
        AlgorithmKind::FedLada,
    ] {
        let h = hyper(6, 3, 3, kind.default_eta_l());
        let serial = run_rounds(&suite, kind, &h, 10, None);
        let parallel = run_rounds(&suite, kind, &h, 10, Some(&pool));
        assert_eq!(serial, parallel, "{kind}");
    }
}

#[test]
fn trials_draw_distinct_plans() {
    let suite = quadratic(20, 1.0, 0.1);
    let h = hyper(5, 2, 2, 0.01);
    let key = |trial| NoiseKey {
        master_seed: 1,
        trial,
        round: 1,
    };
    let a = plan_round(20, AlgorithmKind::FAdamET, &h, key(0)).unwrap();
    let b = plan_round(20, AlgorithmKind::FAdamET, &h, key(1)).unwrap();
    assert_ne!(a, b);
    assert_eq!(a, plan_round(20, AlgorithmKind::FAdamET, &h, key(0)).unwrap());
    // every algorithm sees the same participants under the same key
    let c = plan_round(20, AlgorithmKind::FedAvg, &h, key(0)).unwrap();
    assert_eq!(a.participants, c.participants);
    assert!(c.trackers.is_empty());
    let _ = suite;
}

#[test]
fn divergence_is_reported() {
    let suite = quadratic(4, 1.0, 0.0);
    let h = hyper(4, 0, 5, 50.0);
    let mut server = ServerState::new(ParamVector::filled(4, 1.0), 4);
    let err = (0..2000)
        .find_map(|_| run_round(&mut server, &suite, AlgorithmKind::FedAvg, &h, 0, 0, None).err())
        .expect("diverges");
    assert!(matches!(err, FedError::Domain(_)));
}

#[test]
fn invalid_hyper_is_rejected() {
    let suite = quadratic(4, 1.0, 0.0);
    let mut server = ServerState::new(ParamVector::zeros(4), 4);
    for h in [
        hyper(5, 0, 1, 0.1),
        hyper(2, 3, 1, 0.1),
        hyper(2, 0, 0, 0.1),
        hyper(2, 0, 1, 0.0),
    ] {
        let err = run_round(&mut server, &suite, AlgorithmKind::FAdamGT, &h, 0, 0, None).unwrap_err();
        assert!(err.is_config(), "{h:?}");
    }
}
