//! Exact spreads by enumerating live/blocked states of the probabilistic social edges.
//!
//! Initial activations are independent across consumers, so for a fixed social world the
//! probability that `w` ends active is `1 - prod_{j reaches w} (1 - zbar_j)`. Only social
//! edges with probability strictly between 0 and 1 need to be enumerated.

use crate::error::{Error, Result};
use crate::instance::AimInstance;
use crate::relaxation::{initial_activation, IndicatorVector};

use super::SocialGraph;

/// Largest number of probabilistic social edges the exact routines will enumerate.
pub const EXACT_EDGE_LIMIT: usize = 22;

/// Multilinear extension of the IC spread: `sum_Z Pr[Z | zbar] * rho(Z)`.
pub fn exact_rho_bar(instance: &AimInstance, zbar: &[f64]) -> Result<f64> {
    if zbar.len() != instance.n_consumers {
        return Err(Error::DimensionMismatch { expected: instance.n_consumers, found: zbar.len() });
    }
    let graph = SocialGraph::from_instance(instance);
    let m = graph.node_count();
    let branching: Vec<(usize, f64)> = (0..m)
        .flat_map(|v| graph.out_edges(v).map(|(_, p, id)| (id, p)).collect::<Vec<_>>())
        .filter(|&(_, p)| p > 0.0 && p < 1.0)
        .collect();
    if branching.len() > EXACT_EDGE_LIMIT {
        return Err(Error::ExactTooLarge { branching: branching.len(), limit: EXACT_EDGE_LIMIT });
    }
    let mut branch_slot = vec![usize::MAX; graph.edge_count()];
    for (slot, &(id, _)) in branching.iter().enumerate() {
        branch_slot[id] = slot;
    }
    let sources: Vec<usize> = (0..m).filter(|&j| zbar[j] > 0.0).collect();
    if sources.is_empty() {
        return Ok(0.0);
    }

    let mut active_prob = vec![0.0; m];
    let mut miss = vec![1.0; m];
    let mut seen = vec![usize::MAX; m];
    let mut stack = Vec::with_capacity(m);
    for world in 0u64..1 << branching.len() {
        let weight: f64 =
            branching.iter().enumerate().map(|(k, &(_, p))| if world >> k & 1 == 1 { p } else { 1.0 - p }).product();
        if weight == 0.0 {
            continue;
        }
        let live = |id: usize| match branch_slot[id] {
            usize::MAX => true,
            slot => world >> slot & 1 == 1,
        };
        miss.iter_mut().for_each(|x| *x = 1.0);
        for (tag, &j) in sources.iter().enumerate() {
            stack.clear();
            stack.push(j);
            seen[j] = tag;
            while let Some(v) = stack.pop() {
                miss[v] *= 1.0 - zbar[j];
                for (w, p, id) in graph.out_edges(v) {
                    if seen[w] != tag && p > 0.0 && live(id) {
                        seen[w] = tag;
                        stack.push(w);
                    }
                }
            }
        }
        for (acc, &q) in active_prob.iter_mut().zip(&miss) {
            *acc += weight * (1.0 - q);
        }
        seen.iter_mut().for_each(|x| *x = usize::MAX);
    }
    Ok(active_prob.iter().sum())
}

/// Exact IC spread `rho(Z)` of a deterministic initial set.
pub fn exact_rho(instance: &AimInstance, initial: &[usize]) -> Result<f64> {
    let mut zbar = vec![0.0; instance.n_consumers];
    for &j in initial {
        zbar[j] = 1.0;
    }
    exact_rho_bar(instance, &zbar)
}

/// Exact `sigma(X, Y)`.
pub fn exact_sigma(instance: &AimInstance, providers: &[usize], consumers: &[usize]) -> Result<f64> {
    let x = IndicatorVector::from_indices(instance.n_providers, providers);
    let y = IndicatorVector::from_indices(instance.n_consumers, consumers);
    exact_rho_bar(instance, &initial_activation(&x, &y, &instance.bipartite)?)
}

/// Exact `sigma^(s, Y)`.
pub fn exact_sigma_hat(instance: &AimInstance, s: &[f64], consumers: &[usize]) -> Result<f64> {
    let mut zbar = vec![0.0; instance.n_consumers];
    for &j in consumers {
        zbar[j] = -(-s[j].max(0.0)).exp_m1();
    }
    exact_rho_bar(instance, &zbar)
}
