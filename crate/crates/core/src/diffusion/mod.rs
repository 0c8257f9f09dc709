//! Two-stage cascade: seed providers activate seed consumers through the bipartite matrix,
//! then activation spreads over the social graph under independent cascade.
//!
//! Plain Monte Carlo estimators take any [`rand::Rng`]. The greedy phases of the solver use
//! [`ScenarioEstimator`] instead, where every coin is a keyed hash of
//! `(seed, stream, scenario, edge)`, so different candidate sets are evaluated on the same
//! sampled worlds.

mod exact;
mod oracle;
mod scenario;

pub use exact::{exact_rho, exact_rho_bar, exact_sigma, exact_sigma_hat, EXACT_EDGE_LIMIT};
pub use oracle::{
    generalized_sigma, with_background, BackgroundOracle, ExactIcOracle, FnOracle, MonteCarloIcOracle, SpreadOracle,
};
pub use scenario::{uniform, ScenarioEstimator, StreamId};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::instance::{AimInstance, Matrix, SocialEdge};
use crate::relaxation::miss_probability;

/// Hoeffding sample count for additive error `mc_epsilon * m` with confidence `1 - delta`.
pub fn hoeffding_samples(mc_epsilon: f64, delta: f64) -> usize {
    ((2.0 / delta).ln() / (2.0 * mc_epsilon * mc_epsilon)).ceil() as usize
}

/// Monte Carlo (or exact) value of an expected spread.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpreadEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

impl SpreadEstimate {
    pub fn from_values(values: impl IntoIterator<Item = f64>) -> SpreadEstimate {
        let mut acc = Accumulator::default();
        for v in values {
            acc.push(v);
        }
        acc.finish()
    }
}

/// Running sum and sum of squares; the mean is `sum / n`, so integer-valued samples give a
/// correctly rounded mean regardless of order.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct Accumulator {
    n: usize,
    sum: f64,
    sum_sq: f64,
}

impl Accumulator {
    pub(crate) fn push(&mut self, value: f64) {
        self.n += 1;
        self.sum += value;
        self.sum_sq += value * value;
    }

    pub(crate) fn finish(self) -> SpreadEstimate {
        if self.n == 0 {
            return SpreadEstimate { mean: 0.0, std_error: 0.0, samples: 0 };
        }
        let n = self.n as f64;
        let mean = self.sum / n;
        let std_error = if self.n > 1 {
            let var = ((self.sum_sq - self.sum * mean) / (n - 1.0)).max(0.0);
            (var / n).sqrt()
        } else {
            0.0
        };
        SpreadEstimate { mean, std_error, samples: self.n }
    }
}

/// Out-adjacency of the consumer social graph in compressed form.
#[derive(Clone, Debug)]
pub struct SocialGraph {
    offsets: Vec<usize>,
    targets: Vec<usize>,
    probs: Vec<f64>,
    edge_ids: Vec<usize>,
}

impl SocialGraph {
    pub fn new(m: usize, edges: &[SocialEdge]) -> SocialGraph {
        let mut order: Vec<usize> = (0..edges.len()).collect();
        order.sort_by_key(|&e| (edges[e].source, edges[e].target));
        let mut offsets = vec![0; m + 1];
        for e in edges {
            offsets[e.source + 1] += 1;
        }
        for v in 0..m {
            offsets[v + 1] += offsets[v];
        }
        SocialGraph {
            offsets,
            targets: order.iter().map(|&e| edges[e].target).collect(),
            probs: order.iter().map(|&e| edges[e].prob).collect(),
            edge_ids: order,
        }
    }

    pub fn from_instance(instance: &AimInstance) -> SocialGraph {
        SocialGraph::new(instance.n_consumers, &instance.social_edges)
    }

    pub fn node_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len()
    }

    /// `(target, probability, edge id)` for every edge leaving `v`.
    pub fn out_edges(&self, v: usize) -> impl Iterator<Item = (usize, f64, usize)> + '_ {
        let range = self.offsets[v]..self.offsets[v + 1];
        range.map(move |k| (self.targets[k], self.probs[k], self.edge_ids[k]))
    }
}

#[inline]
pub(crate) fn bernoulli<R: Rng + ?Sized>(rng: &mut R, p: f64) -> bool {
    if p >= 1.0 {
        true
    } else if p <= 0.0 {
        false
    } else {
        rng.gen::<f64>() < p
    }
}

/// Draws the set of seed consumers activated directly by the seed providers: each
/// `j in consumers` is included independently with probability `f_j`.
pub fn sample_initial_set<R: Rng + ?Sized>(
    providers: &[usize],
    consumers: &[usize],
    matrix: &Matrix,
    rng: &mut R,
) -> Vec<usize> {
    consumers.iter().copied().filter(|&j| bernoulli(rng, 1.0 - miss_probability(matrix, providers, j))).collect()
}

/// One independent-cascade run from `initial`; returns the activated consumers, sorted.
pub fn simulate_ic<R: Rng + ?Sized>(graph: &SocialGraph, initial: &[usize], rng: &mut R) -> Vec<usize> {
    let mut active = vec![false; graph.node_count()];
    let mut queue = Vec::with_capacity(initial.len());
    for &v in initial {
        if !active[v] {
            active[v] = true;
            queue.push(v);
        }
    }
    let mut head = 0;
    while head < queue.len() {
        let v = queue[head];
        head += 1;
        for (w, p, _) in graph.out_edges(v) {
            if !active[w] && bernoulli(rng, p) {
                active[w] = true;
                queue.push(w);
            }
        }
    }
    queue.sort_unstable();
    queue
}

/// Monte Carlo estimate of `sigma(X, Y)`.
pub fn estimate_sigma<R: Rng + ?Sized>(
    instance: &AimInstance,
    providers: &[usize],
    consumers: &[usize],
    samples: usize,
    rng: &mut R,
) -> SpreadEstimate {
    let graph = SocialGraph::from_instance(instance);
    SpreadEstimate::from_values((0..samples.max(1)).map(|_| {
        let initial = sample_initial_set(providers, consumers, &instance.bipartite, rng);
        simulate_ic(&graph, &initial, rng).len() as f64
    }))
}

/// Monte Carlo estimate of `sigma^(s, Y)`: each `j in Y` starts active with probability
/// `1 - exp(-s_j)`.
pub fn estimate_sigma_hat<R: Rng + ?Sized>(
    instance: &AimInstance,
    s: &[f64],
    consumers: &[usize],
    samples: usize,
    rng: &mut R,
) -> SpreadEstimate {
    let graph = SocialGraph::from_instance(instance);
    let probs: Vec<f64> = consumers.iter().map(|&j| -(-s[j].max(0.0)).exp_m1()).collect();
    SpreadEstimate::from_values((0..samples.max(1)).map(|_| {
        let initial: Vec<usize> =
            consumers.iter().zip(&probs).filter(|&(_, &p)| bernoulli(rng, p)).map(|(&j, _)| j).collect();
        simulate_ic(&graph, &initial, rng).len() as f64
    }))
}
