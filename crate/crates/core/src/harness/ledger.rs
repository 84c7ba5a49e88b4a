use serde::{Deserialize, Serialize};

use crate::fed_algorithms::{AlgorithmKind, RoundPlan};

/// Vector transfers (one unit = one d-vector) per client, per round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommLedger {
    pub down: Vec<u64>,
    pub up: Vec<u64>,
    /// `(down, up)` units charged in each round.
    pub per_round: Vec<(u64, u64)>,
    participated: Vec<bool>,
}

/// Units one participant moves in a round: `(down, up, extra up if tracker)`.
pub fn unit_rule(kind: AlgorithmKind) -> (u64, u64, u64) {
    match kind {
        AlgorithmKind::FedAvg | AlgorithmKind::LocalAdam => (1, 1, 0),
        AlgorithmKind::Scaffold => (2, 2, 0),
        AlgorithmKind::FedLada => (2, 1, 0),
        AlgorithmKind::FAdamET | AlgorithmKind::FAdamGT => (2, 1, 1),
    }
}

impl CommLedger {
    pub fn new(n: usize) -> Self {
        CommLedger {
            down: vec![0; n],
            up: vec![0; n],
            per_round: Vec::new(),
            participated: vec![false; n],
        }
    }

    /// Charges one round; returns the round's `(down, up)` totals.
    pub fn charge(&mut self, plan: &RoundPlan, kind: AlgorithmKind) -> (u64, u64) {
        let (down, up, tracker_up) = unit_rule(kind);
        let mut round = (0, 0);
        for &c in &plan.participants {
            self.down[c] += down;
            self.up[c] += up;
            self.participated[c] = true;
            round.0 += down;
            round.1 += up;
        }
        if tracker_up > 0 {
            for &c in &plan.trackers {
                self.up[c] += tracker_up;
                round.1 += tracker_up;
            }
        }
        self.per_round.push(round);
        round
    }

    pub fn total_down(&self) -> u64 {
        self.down.iter().sum()
    }

    pub fn total_up(&self) -> u64 {
        self.up.iter().sum()
    }

    /// Cumulative units divided by the population size `n`.
    pub fn per_population_mean(&self) -> (f64, f64) {
        let n = self.down.len().max(1) as f64;
        (self.total_down() as f64 / n, self.total_up() as f64 / n)
    }

    /// Cumulative units divided by the number of clients that ever took part.
    pub fn per_participant_mean(&self) -> (f64, f64) {
        let k = self.participated.iter().filter(|p| **p).count().max(1) as f64;
        (self.total_down() as f64 / k, self.total_up() as f64 / k)
    }

    /// Per-round totals re-summed must match the per-client counters.
    pub fn is_consistent(&self) -> bool {
        let (d, u) = self.per_round.iter().fold((0, 0), |(a, b), (x, y)| (a + x, b + y));
        d == self.total_down() && u == self.total_up()
    }
}
