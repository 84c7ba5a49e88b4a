use rand::seq::SliceRandom;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{FedError, Result};
use crate::seed::{self, Domain};

/// Label-skew partition parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionSpec {
    pub dirichlet_alpha: f64,
    pub classes: usize,
    #[serde(default)]
    pub seed: u64,
}

/// Result of a per-class Dirichlet split.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletPartition {
    /// Sample indices owned by each client, ascending.
    pub shards: Vec<Vec<usize>>,
    /// `proportions[c][i]`: the Dirichlet share of class `c` drawn for client `i`.
    pub proportions: Vec<Vec<f64>>,
    /// Number of samples moved to otherwise empty clients.
    pub repaired: usize,
}

const RESAMPLE_ATTEMPTS: usize = 20;

/// Splits samples among `n` clients: for every class, client shares are drawn
/// from `Dirichlet(α · 1_n)` and the class's shuffled samples are cut at the
/// cumulative shares.
///
/// Every client must own at least one sample. Draws leaving a client empty are
/// redrawn a bounded number of times; after that, each empty client takes one
/// sample from the currently largest shard.
pub fn dirichlet_partition(labels_by_sample: &[usize], n: usize, spec: &PartitionSpec) -> Result<DirichletPartition> {
    if !(spec.dirichlet_alpha > 0.0) || !spec.dirichlet_alpha.is_finite() {
        return Err(FedError::config(format!(
            "dirichlet_alpha must be positive, got {}",
            spec.dirichlet_alpha
        )));
    }
    if n == 0 {
        return Err(FedError::config("partition needs at least one client"));
    }
    if labels_by_sample.len() < n {
        return Err(FedError::config(format!(
            "{} samples cannot cover {n} clients",
            labels_by_sample.len()
        )));
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); spec.classes];
    for (idx, &c) in labels_by_sample.iter().enumerate() {
        if c >= spec.classes {
            return Err(FedError::config(format!(
                "sample {idx} has class {c} >= {}",
                spec.classes
            )));
        }
        by_class[c].push(idx);
    }

    let mut last = None;
    for attempt in 0..RESAMPLE_ATTEMPTS {
        let drawn = draw_once(&by_class, n, spec, attempt as u64)?;
        if drawn.0.iter().all(|s| !s.is_empty()) {
            return Ok(finish(drawn, 0));
        }
        if last.is_none() {
            last = Some(drawn);
        }
    }
    let (mut shards, proportions) = last.expect("at least one attempt");
    let mut repaired = 0;
    for i in 0..n {
        if !shards[i].is_empty() {
            continue;
        }
        let donor = (0..n)
            .max_by(|&a, &b| shards[a].len().cmp(&shards[b].len()).then(b.cmp(&a)))
            .expect("n >= 1");
        let moved = shards[donor].pop().expect("donor holds at least two samples");
        shards[i].push(moved);
        repaired += 1;
    }
    Ok(finish((shards, proportions), repaired))
}

fn finish((mut shards, proportions): (Vec<Vec<usize>>, Vec<Vec<f64>>), repaired: usize) -> DirichletPartition {
    shards.iter_mut().for_each(|s| s.sort_unstable());
    DirichletPartition {
        shards,
        proportions,
        repaired,
    }
}

type Draw = (Vec<Vec<usize>>, Vec<Vec<f64>>);

fn draw_once(by_class: &[Vec<usize>], n: usize, spec: &PartitionSpec, attempt: u64) -> Result<Draw> {
    let mut shards: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut proportions = Vec::with_capacity(by_class.len());
    for (c, members) in by_class.iter().enumerate() {
        let mut rng = seed::stream(spec.seed, Domain::Suite, &[1, attempt, c as u64]);
        let p = dirichlet_draw(spec.dirichlet_alpha, n, &mut rng)?;
        let mut shuffled = members.clone();
        shuffled.shuffle(&mut rng);
        let total = shuffled.len();
        let mut cum = 0.0;
        let mut start = 0;
        for (i, &share) in p.iter().enumerate() {
            cum += share;
            let end = if i + 1 == n {
                total
            } else {
                ((cum * total as f64).floor() as usize).clamp(start, total)
            };
            shards[i].extend_from_slice(&shuffled[start..end]);
            start = end;
        }
        proportions.push(p);
    }
    Ok((shards, proportions))
}

/// `Dirichlet(α · 1_n)` by normalising independent `Gamma(α, 1)` draws.
pub(crate) fn dirichlet_draw<R: rand::Rng + ?Sized>(alpha: f64, n: usize, rng: &mut R) -> Result<Vec<f64>> {
    if n == 1 {
        return Ok(vec![1.0]);
    }
    let gamma = Gamma::new(alpha, 1.0).map_err(|e| FedError::config(format!("invalid Dirichlet parameter: {e}")))?;
    loop {
        let draws: Vec<f64> = (0..n).map(|_| gamma.sample(rng)).collect();
        let total: f64 = draws.iter().sum();
        // Tiny alpha can underflow every component.
        if total > 0.0 && total.is_finite() {
            return Ok(draws.into_iter().map(|g| g / total).collect());
        }
    }
}
