//! Sampled Double Greedy.
//!
//! For every point `s` of a one-sided net over the image of `M`, pick consumers greedily
//! against `sigma^(s, .)`, then providers greedily against `sigma(., Y_s)`, and return the
//! candidate pair with the largest re-estimated spread.
//!
//! All greedy evaluations of one phase share a scenario stream, so every candidate set is
//! scored on the same sampled worlds. Provider selection depends only on `Y_s` and is run
//! once per distinct consumer set.

use std::collections::BTreeMap;

use itertools::Itertools;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diffusion::{exact_sigma, hoeffding_samples, ScenarioEstimator, SocialGraph, SpreadEstimate, StreamId};
use crate::error::{Error, Result};
use crate::greedy::{greedy_max, GreedyTrace};
use crate::instance::{numerical_rank, validate, AimInstance, DEFAULT_RANK_TOL};
use crate::net::{binomial, build_net, size_bound, CoordinateBox, Grid, NetOptions};

/// Scenario stream of the consumer phase.
pub const STREAM_CONSUMERS: u64 = 1;
/// Scenario stream of the provider phase.
pub const STREAM_PROVIDERS: u64 = 2;
/// Scenario stream of the final comparison.
pub const STREAM_FINAL: u64 = 3;

/// Largest `C(n, b1) * C(m, b2)` that [`brute_force_opt`] enumerates.
pub const BRUTE_FORCE_LIMIT: u128 = 10_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SdgConfig {
    pub epsilon: f64,
    pub delta: f64,
    /// Scenarios per greedy evaluation; derived from `epsilon`, `delta` and the net size when unset.
    pub samples_per_eval: Option<usize>,
    pub master_seed: u64,
    pub max_net_points: usize,
    /// Largest `C(m, r) * |grid|^r` enumerated before giving up without building.
    pub max_enumeration: u128,
    /// Additive error per estimate, as a fraction of `m`, used by the automatic sample count.
    pub mc_epsilon: f64,
    pub max_rank: usize,
    pub rank_tol: f64,
    /// Keep only net points reachable by some `x` with exactly `b1` ones.
    pub prune_infeasible: bool,
    /// The final comparison uses this multiple of `samples_per_eval`.
    pub final_sample_factor: usize,
}

impl Default for SdgConfig {
    fn default() -> Self {
        SdgConfig {
            epsilon: 0.5,
            delta: 0.01,
            samples_per_eval: None,
            master_seed: 0,
            max_net_points: 200_000,
            max_enumeration: 1_000_000_000,
            mc_epsilon: 0.05,
            max_rank: 4,
            rank_tol: DEFAULT_RANK_TOL,
            prune_infeasible: true,
            final_sample_factor: 4,
        }
    }
}

impl SdgConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return bad(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad(format!("delta must lie in (0,1), got {}", self.delta));
        }
        if !(self.mc_epsilon > 0.0 && self.mc_epsilon.is_finite()) {
            return bad(format!("mc_epsilon must be positive, got {}", self.mc_epsilon));
        }
        if self.max_net_points == 0 {
            return bad("max_net_points must be at least 1".into());
        }
        if self.samples_per_eval == Some(0) || self.final_sample_factor == 0 {
            return bad("sample counts must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedSolution {
    pub providers: Vec<usize>,
    pub consumers: Vec<usize>,
    pub value: SpreadEstimate,
    pub net_point_index: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetPointReport {
    pub index: usize,
    pub point: Vec<f64>,
    pub consumers: Vec<usize>,
    pub providers: Vec<usize>,
    /// Consumer-phase objective `sigma^(s, Y_s)` on the consumer stream.
    pub sigma_hat: f64,
    /// Provider-phase objective `sigma(X, Y_s)` on the provider stream.
    pub sigma: f64,
    pub final_value: SpreadEstimate,
    pub consumer_trace: GreedyTrace,
    /// Empty when an earlier net point already produced the same consumer set.
    pub provider_trace: Option<GreedyTrace>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub rank: usize,
    pub grid_size: usize,
    pub size_bound: u128,
    pub net_size: usize,
    pub samples_per_eval: usize,
    pub final_samples: usize,
    pub distinct_consumer_sets: usize,
    pub evaluations: usize,
    pub points: Vec<NetPointReport>,
}

/// Per-coordinate range of `x^T M` over `x` with exactly `b1` ones, widened to what a
/// covering net point may take.
pub fn feasible_box(instance: &AimInstance, epsilon: f64) -> CoordinateBox {
    let (n, m, b1) = (instance.n_providers, instance.n_consumers, instance.budget_providers);
    let floor = instance.min_entry();
    let mut lower = Vec::with_capacity(m);
    let mut upper = Vec::with_capacity(m);
    for j in 0..m {
        let mut col: Vec<f64> = (0..n).map(|i| instance.bipartite.get(i, j)).collect();
        col.sort_by(f64::total_cmp);
        let low: f64 = col[..b1].iter().sum();
        let high: f64 = col[n - b1..].iter().sum();
        lower.push(low / (1.0 + epsilon));
        upper.push(high.max(floor));
    }
    CoordinateBox { lower, upper }
}

/// Sample count with Hoeffding error `mc_epsilon * m` per estimate, union-bounded over
/// `evaluations` estimates at total failure probability `delta / 2`, rounded up to a power of
/// two so that averages of integer counts are exact in floating point.
pub fn auto_samples(mc_epsilon: f64, delta: f64, evaluations: usize) -> usize {
    hoeffding_samples(mc_epsilon, delta / (2.0 * evaluations.max(1) as f64)).next_power_of_two()
}

/// Upper bound on greedy evaluations for one net point.
fn evaluations_per_point(instance: &AimInstance) -> usize {
    let (n, m) = (instance.n_providers, instance.n_consumers);
    m * instance.budget_consumers + m + n * instance.budget_providers + n + 1
}

pub fn solve(instance: &AimInstance, config: &SdgConfig) -> Result<(SeedSolution, SolveReport)> {
    config.validate()?;
    let violations = validate(instance);
    if !violations.is_empty() {
        return Err(Error::InvalidInstance(violations));
    }
    let (n, m) = (instance.n_providers, instance.n_consumers);
    let (b1, b2) = (instance.budget_providers, instance.budget_consumers);

    let basis = numerical_rank(&instance.bipartite, config.rank_tol);
    if basis.rank > config.max_rank {
        return Err(Error::RankTooHigh { rank: basis.rank, max: config.max_rank });
    }
    let grid = Grid::build(instance.bit_precision, (1.0 + config.epsilon).sqrt() - 1.0, n)?;
    let bound = size_bound(m, basis.rank, grid.len());
    if bound > config.max_enumeration {
        return Err(Error::NetTooLarge { count: None, cap: config.max_net_points, bound });
    }
    let options = NetOptions {
        bounds: config.prune_infeasible.then(|| feasible_box(instance, config.epsilon)),
        ..NetOptions::default()
    };
    let net = build_net(&instance.bipartite, &basis, instance.bit_precision, config.epsilon, &options)?;
    if net.len() > config.max_net_points {
        return Err(Error::NetTooLarge { count: Some(net.len()), cap: config.max_net_points, bound });
    }

    let samples = config
        .samples_per_eval
        .unwrap_or_else(|| auto_samples(config.mc_epsilon, config.delta, net.len() * evaluations_per_point(instance)));
    let final_samples = samples * config.final_sample_factor;
    let graph = SocialGraph::from_instance(instance);
    let seed = config.master_seed;
    let consumer_ground: Vec<usize> = (0..m).collect();
    let provider_ground: Vec<usize> = (0..n).collect();

    let consumer_phase: Vec<(Vec<f64>, Vec<usize>, GreedyTrace)> = (0..net.len())
        .into_par_iter()
        .map(|i| {
            let s = net.point(i).coords;
            let mut est = ScenarioEstimator::new(instance, &graph, StreamId::new(seed, STREAM_CONSUMERS), samples);
            let mut oracle = |set: &[usize]| est.sigma_hat(&s, set);
            let (mut y, trace) = greedy_max(&mut oracle, &consumer_ground, b2)?;
            y.sort_unstable();
            Ok((s, y, trace))
        })
        .collect::<Result<_>>()?;

    let mut first_with: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
    for (i, (_, y, _)) in consumer_phase.iter().enumerate() {
        first_with.entry(y.clone()).or_insert(i);
    }
    let distinct: Vec<&[usize]> = first_with.keys().map(Vec::as_slice).collect();
    let provider_phase: BTreeMap<&[usize], (Vec<usize>, GreedyTrace)> = distinct
        .par_iter()
        .map(|&y| {
            let mut est = ScenarioEstimator::new(instance, &graph, StreamId::new(seed, STREAM_PROVIDERS), samples);
            let mut oracle = |set: &[usize]| est.sigma(set, y);
            let (mut x, trace) = greedy_max(&mut oracle, &provider_ground, b1)?;
            x.sort_unstable();
            Ok((y, (x, trace)))
        })
        .collect::<Result<_>>()?;

    let pairs: Vec<(&[usize], &[usize])> = provider_phase.iter().map(|(y, (x, _))| (x.as_slice(), *y)).collect();
    let finals: BTreeMap<&[usize], SpreadEstimate> = pairs
        .par_iter()
        .map(|&(x, y)| {
            let mut est = ScenarioEstimator::new(instance, &graph, StreamId::new(seed, STREAM_FINAL), final_samples);
            (y, est.sigma(x, y))
        })
        .collect();

    let mut points: Vec<NetPointReport> = Vec::with_capacity(net.len());
    let mut evaluations = 0;
    let mut best: Option<usize> = None;
    for (i, (s, y, consumer_trace)) in consumer_phase.into_iter().enumerate() {
        let (x, provider_trace) = &provider_phase[y.as_slice()];
        let owner = first_with[y.as_slice()] == i;
        let final_value = finals[y.as_slice()];
        evaluations += consumer_trace.evaluations + if owner { provider_trace.evaluations } else { 0 };
        if best.is_none_or(|b: usize| final_value.mean > points[b].final_value.mean) {
            best = Some(i);
        }
        points.push(NetPointReport {
            index: i,
            point: s,
            sigma_hat: consumer_trace.value(0.0),
            sigma: provider_trace.value(0.0),
            consumers: y.clone(),
            providers: x.clone(),
            final_value,
            consumer_trace,
            provider_trace: owner.then(|| provider_trace.clone()),
        });
    }
    evaluations += pairs.len();
    let best = best.expect("a one-sided net is never empty");
    let winner = &points[best];
    let solution = SeedSolution {
        providers: winner.providers.clone(),
        consumers: winner.consumers.clone(),
        value: winner.final_value,
        net_point_index: best,
    };
    let report = SolveReport {
        rank: basis.rank,
        grid_size: grid.len(),
        size_bound: bound,
        net_size: net.len(),
        samples_per_eval: samples,
        final_samples,
        distinct_consumer_sets: distinct.len(),
        evaluations,
        points,
    };
    Ok((solution, report))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BruteForceOpt {
    pub providers: Vec<usize>,
    pub consumers: Vec<usize>,
    pub value: f64,
}

/// Exact optimum over all budget-respecting pairs; the lexicographically first wins ties.
pub fn brute_force_opt(instance: &AimInstance) -> Result<BruteForceOpt> {
    let (n, m) = (instance.n_providers, instance.n_consumers);
    let (b1, b2) = (instance.budget_providers, instance.budget_consumers);
    let pairs = binomial(n as u128, b1 as u128).saturating_mul(binomial(m as u128, b2 as u128));
    if pairs > BRUTE_FORCE_LIMIT {
        return Err(Error::BruteForceTooLarge { pairs, limit: BRUTE_FORCE_LIMIT });
    }
    let mut best: Option<BruteForceOpt> = None;
    for x in (0..n).combinations(b1) {
        for y in (0..m).combinations(b2) {
            let value = exact_sigma(instance, &x, &y)?;
            if best.as_ref().is_none_or(|b| value > b.value) {
                best = Some(BruteForceOpt { providers: x.clone(), consumers: y, value });
            }
        }
    }
    best.ok_or_else(|| Error::InvalidParameter("no budget-respecting pair exists".into()))
}

/// The guarantee factor `(1 - 1/e - epsilon)^3`.
pub fn approximation_ratio(epsilon: f64) -> Result<f64> {
    let limit = 1.0 - (-1.0f64).exp();
    if !(epsilon > 0.0 && epsilon <= limit + 1e-12) {
        return Err(Error::InvalidParameter(format!("epsilon must lie in (0, 1-1/e], got {epsilon}")));
    }
    Ok((limit - epsilon).max(0.0).powi(3))
}
