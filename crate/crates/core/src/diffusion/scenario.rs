//! Common-random-number estimation.
//!
//! Scenario `t` of a stream fixes one coin per bipartite edge, per social edge and per
//! consumer seed draw, each coin a keyed hash of `(master seed, stream, t, key)`. Coins are
//! computed lazily while a cascade expands, but two evaluations on the same stream see the
//! same worlds. For a fixed scenario the activated count is a coverage function of the seed
//! sets, so averages over scenarios are exactly monotone and submodular in `X` and in `Y`.

use serde::{Deserialize, Serialize};

use crate::instance::AimInstance;

use super::{Accumulator, SocialGraph, SpreadEstimate};

const KEY_BIPARTITE: u64 = 1 << 61;
const KEY_SOCIAL: u64 = 2 << 61;
const KEY_SEED: u64 = 3 << 61;

/// Identifies a reproducible stream of scenarios.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StreamId {
    pub master_seed: u64,
    pub stream: u64,
}

impl StreamId {
    pub fn new(master_seed: u64, stream: u64) -> StreamId {
        StreamId { master_seed, stream }
    }
}

#[inline]
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Uniform `[0, 1)` coin for `(stream, scenario, key)`.
#[inline]
pub fn uniform(stream: StreamId, scenario: u64, key: u64) -> f64 {
    let h = mix(mix(mix(mix(stream.master_seed) ^ stream.stream) ^ scenario) ^ key);
    (h >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[inline]
fn flip(stream: StreamId, scenario: u64, key: u64, p: f64) -> bool {
    if p >= 1.0 {
        true
    } else if p <= 0.0 {
        false
    } else {
        uniform(stream, scenario, key) < p
    }
}

/// Spread estimator evaluating every query on the same `samples` scenarios of `stream`.
pub struct ScenarioEstimator<'a> {
    instance: &'a AimInstance,
    graph: &'a SocialGraph,
    stream: StreamId,
    samples: usize,
    stamp: Vec<u32>,
    epoch: u32,
    queue: Vec<usize>,
}

impl<'a> ScenarioEstimator<'a> {
    pub fn new(
        instance: &'a AimInstance,
        graph: &'a SocialGraph,
        stream: StreamId,
        samples: usize,
    ) -> ScenarioEstimator<'a> {
        ScenarioEstimator {
            instance,
            graph,
            stream,
            samples: samples.max(1),
            stamp: vec![0; graph.node_count()],
            epoch: 0,
            queue: Vec::new(),
        }
    }

    pub fn stream(&self) -> StreamId {
        self.stream
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    /// `sigma(X, Y)`.
    pub fn sigma(&mut self, providers: &[usize], consumers: &[usize]) -> SpreadEstimate {
        let instance = self.instance;
        let matrix = &instance.bipartite;
        let m = matrix.cols() as u64;
        let stream = self.stream;
        self.run(
            |t, j| {
                providers.iter().any(|&i| flip(stream, t, KEY_BIPARTITE | (i as u64 * m + j as u64), matrix.get(i, j)))
            },
            consumers,
        )
    }

    /// `sigma^(s, Y)`: seed `j` starts active with probability `1 - exp(-s_j)`.
    pub fn sigma_hat(&mut self, s: &[f64], consumers: &[usize]) -> SpreadEstimate {
        let probs: Vec<f64> = s.iter().map(|&c| -(-c.max(0.0)).exp_m1()).collect();
        let stream = self.stream;
        self.run(|t, j| flip(stream, t, KEY_SEED | j as u64, probs[j]), consumers)
    }

    /// Classic IC spread: every seed starts active.
    pub fn spread_from(&mut self, seeds: &[usize]) -> SpreadEstimate {
        self.run(|_, _| true, seeds)
    }

    fn run(&mut self, seeded: impl Fn(u64, usize) -> bool, consumers: &[usize]) -> SpreadEstimate {
        let mut acc = Accumulator::default();
        for t in 0..self.samples as u64 {
            self.next_epoch();
            self.queue.clear();
            for &j in consumers {
                if self.stamp[j] != self.epoch && seeded(t, j) {
                    self.stamp[j] = self.epoch;
                    self.queue.push(j);
                }
            }
            acc.push(self.cascade(t) as f64);
        }
        acc.finish()
    }

    fn next_epoch(&mut self) {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.epoch = 1;
        }
    }

    fn cascade(&mut self, t: u64) -> usize {
        let mut head = 0;
        while head < self.queue.len() {
            let v = self.queue[head];
            head += 1;
            for (w, p, id) in self.graph.out_edges(v) {
                if self.stamp[w] != self.epoch && flip(self.stream, t, KEY_SOCIAL | id as u64, p) {
                    self.stamp[w] = self.epoch;
                    self.queue.push(w);
                }
            }
        }
        self.queue.len()
    }
}
