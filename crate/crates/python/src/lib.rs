//! Python bindings: finite metric spaces, transport and GH distances, nuclei,
//! and the scenario runner used by the CLI.

use std::collections::BTreeMap;
use std::sync::Arc;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use qmlab::distances::{gh_distance, BoundKind};
use qmlab::lipgeometry::{mcshane_clip, nucleus_net};
use qmlab::markov::cantor_net;
use qmlab::metric_space::{circle_net, hausdorff_indices, interval_net, line_points};
use qmlab::scenario::{self, RunError, ScenarioFile};
use qmlab::transport::{wasserstein1, wasserstein_inf};
use qmlab::{selfcheck, Error, FiniteMetricSpace, Measure};

fn py_err(e: Error) -> PyErr {
    if e.is_configuration() {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

/// A finite metric space given by its distance matrix.
#[pyclass(name = "MetricSpace", frozen)]
struct PyMetricSpace {
    inner: Arc<FiniteMetricSpace>,
}

impl PyMetricSpace {
    fn wrap(x: qmlab::Result<FiniteMetricSpace>) -> PyResult<Self> {
        x.map(|inner| Self { inner: Arc::new(inner) }).map_err(py_err)
    }

    fn measure(&self, weights: Vec<f64>) -> PyResult<Measure> {
        Measure::new(Arc::clone(&self.inner), weights).map_err(py_err)
    }
}

#[pymethods]
impl PyMetricSpace {
    #[new]
    #[pyo3(signature = (dist, labels=None))]
    fn new(dist: Vec<Vec<f64>>, labels: Option<Vec<String>>) -> PyResult<Self> {
        let labels = labels.unwrap_or_else(|| (0..dist.len()).map(|i| i.to_string()).collect());
        Self::wrap(FiniteMetricSpace::new(labels, dist))
    }

    /// `n` equispaced points on `[0, length]`.
    #[staticmethod]
    fn interval(n: usize, length: f64) -> PyResult<Self> {
        Self::wrap(interval_net(n, length))
    }

    #[staticmethod]
    fn circle(n: usize, circumference: f64) -> PyResult<Self> {
        Self::wrap(circle_net(n, circumference))
    }

    #[staticmethod]
    fn line(coords: Vec<f64>) -> PyResult<Self> {
        Self::wrap(line_points(coords))
    }

    #[staticmethod]
    fn cantor(depth: usize) -> PyResult<Self> {
        Self::wrap(cantor_net(depth))
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("MetricSpace(n={}, diameter={})", self.inner.len(), self.inner.diameter())
    }

    fn d(&self, i: usize, j: usize) -> PyResult<f64> {
        let n = self.inner.len();
        if i >= n || j >= n {
            return Err(PyValueError::new_err(format!("index out of range for {n} points")));
        }
        Ok(self.inner.d(i, j))
    }

    fn matrix(&self) -> Vec<Vec<f64>> {
        self.inner.matrix()
    }

    #[getter]
    fn labels(&self) -> Vec<String> {
        self.inner.labels().to_vec()
    }

    #[getter]
    fn diameter(&self) -> f64 {
        self.inner.diameter()
    }

    #[getter]
    fn radius(&self) -> f64 {
        self.inner.radius()
    }
}

/// W1 distance and an optimal coupling as a list of rows.
#[pyfunction]
fn wasserstein1_coupling(space: &PyMetricSpace, mu: Vec<f64>, nu: Vec<f64>) -> PyResult<(f64, Vec<Vec<f64>>)> {
    let (v, c) = wasserstein1(&space.measure(mu)?, &space.measure(nu)?).map_err(py_err)?;
    Ok((v, c.rows()))
}

#[pyfunction(name = "wasserstein1")]
fn py_wasserstein1(space: &PyMetricSpace, mu: Vec<f64>, nu: Vec<f64>) -> PyResult<f64> {
    wasserstein1_coupling(space, mu, nu).map(|r| r.0)
}

#[pyfunction(name = "wasserstein_inf")]
fn py_wasserstein_inf(space: &PyMetricSpace, mu: Vec<f64>, nu: Vec<f64>) -> PyResult<f64> {
    wasserstein_inf(&space.measure(mu)?, &space.measure(nu)?).map_err(py_err)
}

/// Returns `(value, exact)`; `exact` is false when the search budget ran out.
#[pyfunction(name = "gh_distance")]
fn py_gh_distance(x: &PyMetricSpace, y: &PyMetricSpace) -> (f64, bool) {
    let r = gh_distance(&x.inner, &y.inner);
    (r.value, matches!(r.kind, BoundKind::Exact))
}

#[pyfunction]
fn hausdorff(space: &PyMetricSpace, a: Vec<usize>, b: Vec<usize>) -> PyResult<f64> {
    hausdorff_indices(&space.inner, &a, &b).map_err(py_err)
}

#[pyfunction(name = "mcshane_clip")]
fn py_mcshane_clip(space: &PyMetricSpace, q: Vec<f64>, r: f64) -> PyResult<Vec<f64>> {
    if q.len() != space.inner.len() {
        return Err(PyValueError::new_err("q must have one value per point"));
    }
    Ok(mcshane_clip(&space.inner, &q, r))
}

/// Grid net of the Lipschitz nucleus: `(functions, density)`.
#[pyfunction]
fn nucleus(space: &PyMetricSpace, r: f64, eps: f64) -> PyResult<(Vec<Vec<f64>>, f64)> {
    let nuc = nucleus_net(&space.inner, r, eps).map_err(py_err)?;
    Ok(((0..nuc.len()).map(|k| nuc.function(k).to_vec()).collect(), nuc.density()))
}

/// Runs a scenario given as JSON text. Returns `(report_json, artifacts)`;
/// bad configuration raises ValueError, failed computations RuntimeError.
#[pyfunction]
#[pyo3(signature = (config, seed=None))]
fn run_scenario(py: Python<'_>, config: &str, seed: Option<u64>) -> PyResult<(String, BTreeMap<String, String>)> {
    let file = ScenarioFile::from_json(config).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let outcome = py.detach(|| scenario::run(&file, seed)).map_err(|e| match e {
        RunError::Config(e) => PyValueError::new_err(e.to_string()),
        RunError::Domain(e) => PyRuntimeError::new_err(e.to_string()),
    })?;
    let report = serde_json::to_string_pretty(&outcome.report).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok((report, outcome.artifacts.into_iter().map(|a| (a.name, a.contents)).collect()))
}

/// Runs the built-in invariant suite; returns `(all_passed, [(name, passed, detail)])`.
#[pyfunction(name = "selfcheck")]
#[pyo3(signature = (seed=0))]
fn py_selfcheck(seed: u64) -> (bool, Vec<(String, bool, String)>) {
    let rep = selfcheck::run(seed);
    (rep.all_passed, rep.checks.into_iter().map(|c| (c.name.to_string(), c.passed, c.detail)).collect())
}

#[pymodule]
fn pyqmlab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", qmlab::VERSION)?;
    m.add_class::<PyMetricSpace>()?;
    m.add_function(wrap_pyfunction!(py_wasserstein1, m)?)?;
    m.add_function(wrap_pyfunction!(wasserstein1_coupling, m)?)?;
    m.add_function(wrap_pyfunction!(py_wasserstein_inf, m)?)?;
    m.add_function(wrap_pyfunction!(py_gh_distance, m)?)?;
    m.add_function(wrap_pyfunction!(hausdorff, m)?)?;
    m.add_function(wrap_pyfunction!(py_mcshane_clip, m)?)?;
    m.add_function(wrap_pyfunction!(nucleus, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(py_selfcheck, m)?)?;
    Ok(())
}
