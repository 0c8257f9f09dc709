//! Generalized social-spread functions: any monotone submodular `rho(Z)` over initial
//! consumer sets, optionally mixed with background activation.

use rand::RngCore;

use crate::error::Result;
use crate::instance::AimInstance;

use super::{bernoulli, sample_initial_set, simulate_ic, Accumulator, SocialGraph, SpreadEstimate};

/// Value oracle for a spread function `rho` over consumer subsets.
///
/// Implementations are expected to be monotone and submodular with `rho(empty) >= 0`; the
/// randomness source is passed in so stochastic oracles stay reproducible.
pub trait SpreadOracle {
    fn evaluate(&self, initial: &[usize], rng: &mut dyn RngCore) -> Result<f64>;
}

impl<T: SpreadOracle + ?Sized> SpreadOracle for &T {
    fn evaluate(&self, initial: &[usize], rng: &mut dyn RngCore) -> Result<f64> {
        (**self).evaluate(initial, rng)
    }
}

/// Wraps a deterministic closure.
pub struct FnOracle<F>(pub F);

impl<F: Fn(&[usize]) -> f64> SpreadOracle for FnOracle<F> {
    fn evaluate(&self, initial: &[usize], _rng: &mut dyn RngCore) -> Result<f64> {
        Ok((self.0)(initial))
    }
}

/// Exact IC spread over the instance's social graph.
pub struct ExactIcOracle<'a> {
    pub instance: &'a AimInstance,
}

impl SpreadOracle for ExactIcOracle<'_> {
    fn evaluate(&self, initial: &[usize], _rng: &mut dyn RngCore) -> Result<f64> {
        super::exact_rho(self.instance, initial)
    }
}

/// Monte Carlo IC spread, `samples` cascades per evaluation.
pub struct MonteCarloIcOracle {
    graph: SocialGraph,
    samples: usize,
}

impl MonteCarloIcOracle {
    pub fn new(instance: &AimInstance, samples: usize) -> MonteCarloIcOracle {
        MonteCarloIcOracle { graph: SocialGraph::from_instance(instance), samples: samples.max(1) }
    }
}

impl SpreadOracle for MonteCarloIcOracle {
    fn evaluate(&self, initial: &[usize], rng: &mut dyn RngCore) -> Result<f64> {
        let total: usize = (0..self.samples).map(|_| simulate_ic(&self.graph, initial, rng).len()).sum();
        Ok(total as f64 / self.samples as f64)
    }
}

/// `sigma(X, Y) = sum_Z Pr_X[Z] rho(Z)` by sampling `Z` from the provider stage.
pub fn generalized_sigma<O: SpreadOracle + ?Sized, R: RngCore>(
    instance: &AimInstance,
    providers: &[usize],
    consumers: &[usize],
    oracle: &O,
    samples: usize,
    rng: &mut R,
) -> Result<SpreadEstimate> {
    let mut acc = Accumulator::default();
    for _ in 0..samples.max(1) {
        let initial = sample_initial_set(providers, consumers, &instance.bipartite, rng);
        acc.push(oracle.evaluate(&initial, rng)?);
    }
    Ok(acc.finish())
}

/// `rho'(Z) = E_{Z0 ~ b}[rho(Z u Z0)]`, estimated with fresh background draws per call.
pub struct BackgroundOracle<O> {
    inner: O,
    background: Vec<f64>,
    samples_inner: usize,
}

pub fn with_background<O: SpreadOracle>(inner: O, background: Vec<f64>, samples_inner: usize) -> BackgroundOracle<O> {
    BackgroundOracle { inner, background, samples_inner: samples_inner.max(1) }
}

impl<O: SpreadOracle> SpreadOracle for BackgroundOracle<O> {
    fn evaluate(&self, initial: &[usize], rng: &mut dyn RngCore) -> Result<f64> {
        let mut union = vec![false; self.background.len()];
        for &j in initial {
            union[j] = true;
        }
        // a 0/1 background fixes Z0, so one inner evaluation is exact
        let deterministic = self.background.iter().all(|&b| b <= 0.0 || b >= 1.0);
        let draws = if deterministic { 1 } else { self.samples_inner };
        let mut total = 0.0;
        for _ in 0..draws {
            let set: Vec<usize> = union
                .iter()
                .zip(&self.background)
                .enumerate()
                .filter_map(|(j, (&seed, &b))| (seed || bernoulli(rng, b)).then_some(j))
                .collect();
            total += self.inner.evaluate(&set, rng)?;
        }
        Ok(if draws == 1 { total } else { total / draws as f64 })
    }
}
