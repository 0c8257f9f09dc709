//! Lazy greedy (CELF) for cardinality-constrained monotone submodular maximization.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::diffusion::SpreadEstimate;
use crate::error::{Error, Result};

/// Value oracle for a set function over a ground set of element indices.
pub trait ObjectiveOracle {
    fn evaluate(&mut self, set: &[usize]) -> SpreadEstimate;
}

impl<F: FnMut(&[usize]) -> SpreadEstimate> ObjectiveOracle for F {
    fn evaluate(&mut self, set: &[usize]) -> SpreadEstimate {
        self(set)
    }
}

/// Adapts an exact set function to [`ObjectiveOracle`].
pub struct ExactObjective<F>(pub F);

impl<F: FnMut(&[usize]) -> f64> ObjectiveOracle for ExactObjective<F> {
    fn evaluate(&mut self, set: &[usize]) -> SpreadEstimate {
        SpreadEstimate { mean: (self.0)(set), std_error: 0.0, samples: 0 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GreedyTrace {
    /// Picked elements in order with the marginal gain estimated when each was accepted.
    pub picks: Vec<(usize, f64)>,
    pub evaluations: usize,
}

impl GreedyTrace {
    /// Estimated objective value of the final set.
    pub fn value(&self, base: f64) -> f64 {
        base + self.picks.iter().map(|&(_, g)| g).sum::<f64>()
    }
}

struct Entry {
    /// Gain clamped at zero; ordering key.
    key: f64,
    gain: f64,
    element: usize,
    /// Number of picks made when `gain` was computed.
    round: usize,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    // larger key first, then lower element index
    fn cmp(&self, other: &Self) -> Ordering {
        self.key.total_cmp(&other.key).then_with(|| other.element.cmp(&self.element))
    }
}

/// Picks `budget` elements of `ground` by lazy greedy.
///
/// With an exact oracle the result equals plain greedy with ties broken toward the lowest
/// element index. Uses at most `|ground| * budget + |ground|` oracle calls.
pub fn greedy_max<O: ObjectiveOracle + ?Sized>(
    oracle: &mut O,
    ground: &[usize],
    budget: usize,
) -> Result<(Vec<usize>, GreedyTrace)> {
    if budget > ground.len() {
        return Err(Error::BudgetExceedsGround { budget, ground: ground.len() });
    }
    let mut trace = GreedyTrace::default();
    if budget == 0 {
        return Ok((Vec::new(), trace));
    }
    let mut chosen: Vec<usize> = Vec::with_capacity(budget);
    let mut current = oracle.evaluate(&[]).mean;
    trace.evaluations += 1;

    if budget == ground.len() {
        let mut order = ground.to_vec();
        order.sort_unstable();
        for e in order {
            chosen.push(e);
            let value = oracle.evaluate(&chosen).mean;
            trace.evaluations += 1;
            trace.picks.push((e, value - current));
            current = value;
        }
        return Ok((chosen, trace));
    }

    let mut heap = BinaryHeap::with_capacity(ground.len());
    for &e in ground {
        let gain = oracle.evaluate(&[e]).mean - current;
        trace.evaluations += 1;
        heap.push(Entry { key: gain.max(0.0), gain, element: e, round: 0 });
    }
    let mut scratch = Vec::with_capacity(budget);
    while chosen.len() < budget {
        let top = heap.pop().expect("heap holds every unpicked element");
        if top.round == chosen.len() {
            chosen.push(top.element);
            trace.picks.push((top.element, top.gain));
            current += top.gain;
            continue;
        }
        scratch.clear();
        scratch.extend_from_slice(&chosen);
        scratch.push(top.element);
        let value = oracle.evaluate(&scratch).mean;
        trace.evaluations += 1;
        let gain = value - current;
        heap.push(Entry { key: gain.max(0.0), gain, element: top.element, round: chosen.len() });
    }
    Ok((chosen, trace))
}
