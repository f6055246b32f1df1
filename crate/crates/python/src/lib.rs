//! Python bindings for the `keygraph` crate.

use keygraph::analysis::graph_stats;
use keygraph::exactprob;
use keygraph::montecarlo::{self, Estimate};
use keygraph::sampler::{build_graph, SampledGraph, SeedSpec};
use keygraph::scaling;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn value_err(e: keygraph::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Validated scheme parameters: class probabilities, ring sizes and pool size.
#[pyclass(name = "SchemeParams", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PySchemeParams {
    inner: keygraph::SchemeParams,
}

#[pymethods]
impl PySchemeParams {
    #[new]
    fn new(probs: Vec<f64>, ring_sizes: Vec<u64>, pool_size: u64) -> PyResult<Self> {
        let inner = keygraph::validate_scheme(probs.len(), &probs, &ring_sizes, pool_size)
            .map_err(value_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn probs(&self) -> Vec<f64> {
        self.inner.mix().probs().to_vec()
    }

    #[getter]
    fn ring_sizes(&self) -> Vec<u64> {
        self.inner.mix().ring_sizes().to_vec()
    }

    #[getter]
    fn pool_size(&self) -> u64 {
        self.inner.pool_size()
    }

    #[getter]
    fn num_classes(&self) -> usize {
        self.inner.num_classes()
    }

    fn edge_prob(&self, i: usize, j: usize) -> PyResult<f64> {
        exactprob::edge_prob(i, j, &self.inner).map_err(value_err)
    }

    fn mean_edge_probs(&self) -> Vec<f64> {
        exactprob::mean_edge_probs(&self.inner)
    }

    fn expected_isolated(&self, n: u64) -> PyResult<f64> {
        exactprob::expected_isolated(n, &self.inner).map_err(value_err)
    }

    fn expected_class1_isolated(&self, n: u64) -> PyResult<f64> {
        exactprob::expected_class1_isolated(n, &self.inner).map_err(value_err)
    }

    fn second_moment_ratio(&self, n: u64) -> PyResult<f64> {
        exactprob::second_moment_ratio(n, &self.inner).map_err(value_err)
    }

    fn expected_pool_coverage(&self, s: u64) -> f64 {
        exactprob::expected_pool_coverage(s, &self.inner)
    }

    fn achieved_c(&self, n: u64) -> PyResult<f64> {
        scaling::achieved_c(n, &self.inner).map_err(value_err)
    }

    fn __repr__(&self) -> String {
        format!(
            "SchemeParams(probs={:?}, ring_sizes={:?}, pool_size={})",
            self.inner.mix().probs(),
            self.inner.mix().ring_sizes(),
            self.inner.pool_size()
        )
    }
}

/// One sampled graph.
#[pyclass(name = "Graph", frozen)]
struct PyGraph {
    inner: SampledGraph,
}

#[pymethods]
impl PyGraph {
    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn classes(&self) -> Vec<usize> {
        self.inner.classes.clone()
    }

    #[getter]
    fn rings(&self) -> Vec<Vec<u32>> {
        self.inner.rings.clone()
    }

    #[getter]
    fn edges(&self) -> Vec<(u32, u32)> {
        self.inner.edges.clone()
    }

    fn degrees(&self) -> Vec<u32> {
        self.inner.degrees()
    }

    /// Isolation and component statistics as a dict.
    fn stats<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let s = graph_stats(&self.inner);
        let d = PyDict::new(py);
        d.set_item("isolated_total", s.isolated_total)?;
        d.set_item("isolated_by_class", s.isolated_by_class)?;
        d.set_item("connected", s.connected)?;
        d.set_item("component_count", s.component_count)?;
        d.set_item("largest_component", s.largest_component)?;
        Ok(d)
    }

    fn dump(&self) -> String {
        self.inner.dump()
    }
}

#[pyfunction]
#[pyo3(signature = (scheme, n, master_seed, trial=0))]
fn sample_graph(
    scheme: &PySchemeParams,
    n: usize,
    master_seed: u64,
    trial: u64,
) -> PyResult<PyGraph> {
    let inner =
        build_graph(n, &scheme.inner, SeedSpec::new(master_seed, trial)).map_err(value_err)?;
    Ok(PyGraph { inner })
}

fn estimate_dict<'py>(py: Python<'py>, e: &Estimate) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("mean", e.mean)?;
    d.set_item("stderr", e.stderr)?;
    d.set_item("trials", e.trials)?;
    d.set_item("ci95", (e.ci95_low, e.ci95_high))?;
    Ok(d)
}

/// Monte-Carlo estimates over independent graphs, keyed by quantity.
#[pyfunction]
fn run_trials<'py>(
    py: Python<'py>,
    scheme: &PySchemeParams,
    n: u64,
    trials: u64,
    master_seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let theta = scheme.inner.clone();
    let s = py
        .detach(move || montecarlo::run_trials(&theta, n, trials, master_seed, false))
        .map_err(value_err)?;
    let d = PyDict::new(py);
    d.set_item("no_isolated", estimate_dict(py, &s.no_isolated)?)?;
    d.set_item("connected", estimate_dict(py, &s.connected)?)?;
    d.set_item("isolated", estimate_dict(py, &s.isolated)?)?;
    d.set_item("class1_isolated", estimate_dict(py, &s.class1_isolated)?)?;
    d.set_item("master_seed", master_seed)?;
    Ok(d)
}

/// Smallest ring sizes reaching `target_c`; returns `(ring_sizes, lambda1, achieved_c)`.
#[pyfunction]
fn dimension(
    n: u64,
    pool_size: u64,
    probs: Vec<f64>,
    ring_shape: Vec<f64>,
    target_c: f64,
) -> PyResult<(Vec<u64>, f64, f64)> {
    let d = scaling::dimension_min_ring(n, pool_size, &probs, &ring_shape, target_c)
        .map_err(value_err)?;
    Ok((d.ring_sizes, d.lambda1, d.achieved_c))
}

#[pymodule]
fn keygraph_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySchemeParams>()?;
    m.add_class::<PyGraph>()?;
    m.add_function(wrap_pyfunction!(sample_graph, m)?)?;
    m.add_function(wrap_pyfunction!(run_trials, m)?)?;
    m.add_function(wrap_pyfunction!(dimension, m)?)?;
    Ok(())
}
