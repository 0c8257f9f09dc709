//! Python bindings: instances, the solver, exact and sampled spreads, nets and generators.

use std::collections::BTreeMap;

use amphimax::diffusion::{estimate_sigma, exact_sigma as exact_sigma_core};
use amphimax::generators::GeneratorSpec;
use amphimax::instance::{numerical_rank, AimInstance, SocialEdge, DEFAULT_RANK_TOL};
use amphimax::net::{build_net as build_net_core, size_bound, Grid, NetOptions};
use amphimax::sdg::{
    approximation_ratio as ratio_core, brute_force_opt as brute_force_core, solve as solve_core, SdgConfig,
};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn check_indices(what: &str, list: &[usize], size: usize) -> PyResult<()> {
    match list.iter().find(|&&i| i >= size) {
        Some(bad) => Err(PyValueError::new_err(format!("{what} index {bad} out of range 0..{size}"))),
        None => Ok(()),
    }
}

/// A validated problem instance.
#[pyclass(name = "Instance", module = "amphimax", frozen)]
pub struct PyInstance {
    inner: AimInstance,
}

#[pymethods]
impl PyInstance {
    /// Builds an instance from a dense matrix, `(source, target, prob)` edges and budgets.
    #[new]
    #[pyo3(signature = (matrix, social_edges, budget_providers, budget_consumers, bit_precision=20))]
    fn new(
        matrix: Vec<Vec<f64>>,
        social_edges: Vec<(usize, usize, f64)>,
        budget_providers: usize,
        budget_consumers: usize,
        bit_precision: u32,
    ) -> PyResult<Self> {
        let bipartite = amphimax::Matrix::from_rows(&matrix).map_err(value_error)?;
        let inner = AimInstance {
            n_providers: bipartite.rows(),
            n_consumers: if matrix.is_empty() { 0 } else { bipartite.cols() },
            bipartite,
            social_edges: social_edges
                .into_iter()
                .map(|(source, target, prob)| SocialEdge { source, target, prob })
                .collect(),
            budget_providers,
            budget_consumers,
            bit_precision,
        }
        .checked()
        .map_err(value_error)?;
        Ok(PyInstance { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyInstance { inner: AimInstance::from_json(text).map_err(value_error)? })
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[getter]
    fn n_providers(&self) -> usize {
        self.inner.n_providers
    }

    #[getter]
    fn n_consumers(&self) -> usize {
        self.inner.n_consumers
    }

    #[getter]
    fn budgets(&self) -> (usize, usize) {
        (self.inner.budget_providers, self.inner.budget_consumers)
    }

    #[getter]
    fn matrix(&self) -> Vec<Vec<f64>> {
        self.inner.bipartite.to_rows()
    }

    #[getter]
    fn social_edges(&self) -> Vec<(usize, usize, f64)> {
        self.inner.social_edges.iter().map(|e| (e.source, e.target, e.prob)).collect()
    }

    /// Numerical rank of the activation matrix.
    #[pyo3(signature = (tol=DEFAULT_RANK_TOL))]
    fn rank(&self, tol: f64) -> usize {
        numerical_rank(&self.inner.bipartite, tol).rank
    }

    fn __repr__(&self) -> String {
        format!(
            "Instance(n={}, m={}, edges={}, budgets=({}, {}))",
            self.inner.n_providers,
            self.inner.n_consumers,
            self.inner.social_edges.len(),
            self.inner.budget_providers,
            self.inner.budget_consumers
        )
    }
}

/// Seed sets chosen by the solver with their re-estimated spread.
#[pyclass(name = "Solution", module = "amphimax", frozen, get_all)]
pub struct PySolution {
    providers: Vec<usize>,
    consumers: Vec<usize>,
    value: f64,
    std_error: f64,
    net_point_index: usize,
    net_size: usize,
    rank: usize,
    samples_per_eval: usize,
}

#[pymethods]
impl PySolution {
    fn __repr__(&self) -> String {
        format!(
            "Solution(providers={:?}, consumers={:?}, value={}, std_error={})",
            self.providers, self.consumers, self.value, self.std_error
        )
    }
}

/// Runs Sampled Double Greedy.
#[pyfunction]
#[pyo3(signature = (instance, epsilon=0.5, delta=0.01, seed=0, samples=None, max_net_points=200_000))]
fn solve(
    py: Python<'_>,
    instance: &PyInstance,
    epsilon: f64,
    delta: f64,
    seed: u64,
    samples: Option<usize>,
    max_net_points: usize,
) -> PyResult<PySolution> {
    let config = SdgConfig {
        epsilon,
        delta,
        samples_per_eval: samples,
        master_seed: seed,
        max_net_points,
        ..SdgConfig::default()
    };
    let inner = &instance.inner;
    let (solution, report) = py.detach(|| solve_core(inner, &config)).map_err(value_error)?;
    Ok(PySolution {
        providers: solution.providers,
        consumers: solution.consumers,
        value: solution.value.mean,
        std_error: solution.value.std_error,
        net_point_index: solution.net_point_index,
        net_size: report.net_size,
        rank: report.rank,
        samples_per_eval: report.samples_per_eval,
    })
}

/// Exact expected spread of `(x, y)`.
#[pyfunction]
fn exact_sigma(instance: &PyInstance, x: Vec<usize>, y: Vec<usize>) -> PyResult<f64> {
    check_indices("provider", &x, instance.inner.n_providers)?;
    check_indices("consumer", &y, instance.inner.n_consumers)?;
    exact_sigma_core(&instance.inner, &x, &y).map_err(value_error)
}

/// Monte Carlo spread of `(x, y)` as `(mean, std_error)`.
#[pyfunction]
#[pyo3(signature = (instance, x, y, samples=10_000, seed=0))]
fn simulate(instance: &PyInstance, x: Vec<usize>, y: Vec<usize>, samples: usize, seed: u64) -> PyResult<(f64, f64)> {
    check_indices("provider", &x, instance.inner.n_providers)?;
    check_indices("consumer", &y, instance.inner.n_consumers)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let e = estimate_sigma(&instance.inner, &x, &y, samples, &mut rng);
    Ok((e.mean, e.std_error))
}

/// Exact optimum `(providers, consumers, value)` by enumeration of all budget-respecting pairs.
#[pyfunction]
fn brute_force_opt(instance: &PyInstance) -> PyResult<(Vec<usize>, Vec<usize>, f64)> {
    let opt = brute_force_core(&instance.inner).map_err(value_error)?;
    Ok((opt.providers, opt.consumers, opt.value))
}

/// `(1 - 1/e - epsilon)^3`.
#[pyfunction]
fn approximation_ratio(epsilon: f64) -> PyResult<f64> {
    ratio_core(epsilon).map_err(value_error)
}

/// Points of the one-sided net over the image of the activation matrix.
#[pyfunction]
#[pyo3(signature = (instance, epsilon, max_points=1_000_000))]
fn build_net(instance: &PyInstance, epsilon: f64, max_points: usize) -> PyResult<Vec<Vec<f64>>> {
    let inner = &instance.inner;
    let basis = numerical_rank(&inner.bipartite, DEFAULT_RANK_TOL);
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(PyValueError::new_err(format!("epsilon must be positive, got {epsilon}")));
    }
    let grid =
        Grid::build(inner.bit_precision, (1.0 + epsilon).sqrt() - 1.0, inner.n_providers).map_err(value_error)?;
    let bound = size_bound(inner.n_consumers, basis.rank, grid.len());
    if bound > 100 * max_points as u128 {
        return Err(PyValueError::new_err(format!(
            "net enumeration bound {bound} is far above max_points {max_points}"
        )));
    }
    let net = build_net_core(&inner.bipartite, &basis, inner.bit_precision, epsilon, &NetOptions::default())
        .map_err(value_error)?;
    if net.len() > max_points {
        return Err(PyValueError::new_err(format!("net has {} points, above max_points {max_points}", net.len())));
    }
    Ok(net.points().map(|p| p.coords).collect())
}

/// Generates an instance of `family` (`rank_r`, `planted`, `classic_im`, `three_layer`);
/// returns the instance and, for `planted`, the clique vertices.
#[pyfunction]
#[pyo3(signature = (family, params=BTreeMap::new(), seed=0))]
fn generate(family: &str, params: BTreeMap<String, String>, seed: u64) -> PyResult<(PyInstance, Option<Vec<usize>>)> {
    let spec = GeneratorSpec::from_params(family, &params).map_err(value_error)?;
    let generated = spec.generate(seed).map_err(value_error)?;
    Ok((PyInstance { inner: generated.instance }, generated.planted))
}

#[pymodule]
#[pyo3(name = "amphimax")]
fn amphimax_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyInstance>()?;
    m.add_class::<PySolution>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(exact_sigma, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(brute_force_opt, m)?)?;
    m.add_function(wrap_pyfunction!(approximation_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(build_net, m)?)?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    Ok(())
}
