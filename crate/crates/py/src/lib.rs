//! Python bindings for `rbd-core`.

use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use rbd_core::check::{run_checks, CheckConfig};
use rbd_core::dsl::{parse_spec, print_spec, SpecDocument};
use rbd_core::eval::{self, uniform_grid};
use rbd_core::montecarlo::{self, IndicatorMatrix, DEFAULT_CHUNK_SIZE};
use rbd_core::{distributions, Block, FailureModel, McConfig, McEstimate, RbdModel, Segment, TimeValue};

fn value_error(e: rbd_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn time(t: f64) -> PyResult<TimeValue> {
    TimeValue::new(t).map_err(value_error)
}

fn segments(rates: &[f64]) -> Vec<Segment> {
    rates
        .iter()
        .enumerate()
        .map(|(i, &r)| Segment::exponential(format!("s{i}"), r))
        .collect()
}

/// A validated reliability block diagram.
#[pyclass(name = "Model", module = "rbd_py", frozen)]
struct PyModel {
    inner: RbdModel,
}

#[pymethods]
impl PyModel {
    /// Parses DSL text. Raises ValueError listing every diagnostic.
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        parse_spec(text)
            .map(|doc| PyModel { inner: doc.model })
            .map_err(|errors| {
                let lines: Vec<String> = errors.iter().map(ToString::to_string).collect();
                PyValueError::new_err(lines.join("\n"))
            })
    }

    #[staticmethod]
    fn from_file(path: &str) -> PyResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| PyOSError::new_err(format!("{path}: {e}")))?;
        Self::parse(&text)
    }

    /// Series of exponential segments named s0, s1, ...
    #[staticmethod]
    fn series(name: &str, rates: Vec<f64>) -> PyResult<Self> {
        RbdModel::series(name, segments(&rates))
            .map(|inner| PyModel { inner })
            .map_err(value_error)
    }

    #[getter]
    fn name(&self) -> &str {
        self.inner.name()
    }

    #[getter]
    fn leaf_count(&self) -> usize {
        self.inner.leaves().len()
    }

    fn evaluate(&self, t: f64) -> PyResult<f64> {
        Ok(eval::evaluate(&self.inner, time(t)?).get())
    }

    /// `(times, values)` on the grid `{0, t_max/steps, ..., t_max}`.
    fn curve(&self, py: Python<'_>, t_max: f64, steps: usize) -> PyResult<(Vec<f64>, Vec<f64>)> {
        let t_max = time(t_max)?;
        let curve = py
            .detach(|| eval::reliability_curve(&self.inner, t_max, steps))
            .map_err(value_error)?;
        Ok(curve.points().unzip())
    }

    #[pyo3(signature = (t, samples, seed = 0, chunk_size = DEFAULT_CHUNK_SIZE))]
    fn simulate(&self, py: Python<'_>, t: f64, samples: u64, seed: u64, chunk_size: u64) -> PyResult<PyEstimate> {
        let t = time(t)?;
        let cfg = McConfig::with_chunk_size(seed, samples, chunk_size).map_err(value_error)?;
        py.detach(|| montecarlo::estimate_system_reliability(&self.inner, t, &cfg))
            .map(|inner| PyEstimate { inner })
            .map_err(value_error)
    }

    /// Runs the property suite. Returns `(passed, report_json)`.
    #[pyo3(signature = (t_max = 50.0, steps = 50, samples = 100_000, seed = 0, epsilon = 1e-6))]
    fn check(
        &self,
        py: Python<'_>,
        t_max: f64,
        steps: usize,
        samples: u64,
        seed: u64,
        epsilon: f64,
    ) -> PyResult<(bool, String)> {
        let cfg = CheckConfig {
            grid: uniform_grid(time(t_max)?, steps).map_err(value_error)?,
            epsilon,
            mc: McConfig::new(seed, samples).map_err(value_error)?,
            independence_events: 8,
        };
        let report = py.detach(|| run_checks(&self.inner, &cfg)).map_err(value_error)?;
        let json = serde_json::to_string(&report).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok((report.passed(), json))
    }

    /// Canonical DSL text; parsing it gives back an equal model.
    fn to_spec(&self) -> String {
        print_spec(&SpecDocument::from_model(self.inner.clone()))
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!("Model(name={:?}, leaves={})", self.inner.name(), self.inner.leaves().len())
    }
}

/// Monte Carlo survival estimate.
#[pyclass(name = "Estimate", module = "rbd_py", frozen)]
struct PyEstimate {
    inner: McEstimate,
}

#[pymethods]
impl PyEstimate {
    #[getter]
    fn p_hat(&self) -> f64 {
        self.inner.p_hat
    }

    #[getter]
    fn std_err(&self) -> f64 {
        self.inner.std_err
    }

    #[getter]
    fn samples(&self) -> u64 {
        self.inner.samples
    }

    /// `|p_hat - reference| / std_err`.
    fn z_score(&self, reference: f64) -> f64 {
        self.inner.z_score(reference)
    }

    fn __repr__(&self) -> String {
        format!(
            "Estimate(p_hat={}, std_err={}, samples={})",
            self.inner.p_hat, self.inner.std_err, self.inner.samples
        )
    }
}

fn exponential(rate: f64) -> PyResult<FailureModel> {
    FailureModel::exponential(rate).map_err(value_error)
}

#[pyfunction]
fn cdf(rate: f64, t: f64) -> PyResult<f64> {
    distributions::cdf(&exponential(rate)?, t).map_err(value_error)
}

#[pyfunction]
fn reliability(rate: f64, t: f64) -> PyResult<f64> {
    Ok(distributions::reliability(&exponential(rate)?, time(t)?)
        .map_err(value_error)?
        .get())
}

#[pyfunction]
fn series_reliability(rates: Vec<f64>, t: f64) -> PyResult<f64> {
    Ok(eval::series_reliability(&segments(&rates), time(t)?)
        .map_err(value_error)?
        .get())
}

#[pyfunction]
fn series_min_bound(rates: Vec<f64>, t: f64) -> PyResult<f64> {
    Ok(eval::series_min_bound(&segments(&rates), time(t)?)
        .map_err(value_error)?
        .get())
}

#[pyfunction]
fn parallel_reliability(rates: Vec<f64>, t: f64) -> PyResult<f64> {
    let blocks: Vec<Block> = segments(&rates).into_iter().map(Block::Leaf).collect();
    Ok(eval::parallel_reliability(&blocks, time(t)?)
        .map_err(value_error)?
        .get())
}

#[pyfunction]
fn pipeline_reliability(rates: Vec<f64>, t: f64) -> PyResult<f64> {
    Ok(eval::pipeline_reliability_closed_form(&rates, time(t)?)
        .map_err(value_error)?
        .get())
}

/// Product-rule independence test over all subsets of two or more columns.
#[pyfunction]
#[pyo3(signature = (rows, sigmas = 5.0))]
fn check_independence<'py>(py: Python<'py>, rows: Vec<Vec<bool>>, sigmas: f64) -> PyResult<Bound<'py, PyDict>> {
    let matrix = IndicatorMatrix::from_rows(&rows).map_err(value_error)?;
    let report = montecarlo::check_mutual_independence(&matrix, sigmas).map_err(value_error)?;
    let d = PyDict::new(py);
    d.set_item("passed", report.passed())?;
    d.set_item("subsets_checked", report.subsets_checked)?;
    d.set_item("subsets_failed", report.subsets_failed)?;
    d.set_item("max_z", report.max_z)?;
    Ok(d)
}

/// Survival indicators of independent exponential segments at `t`.
#[pyfunction]
#[pyo3(signature = (rates, t, samples, seed = 0))]
fn sample_indicators(py: Python<'_>, rates: Vec<f64>, t: f64, samples: u64, seed: u64) -> PyResult<Vec<Vec<bool>>> {
    let t = time(t)?;
    let cfg = McConfig::new(seed, samples).map_err(value_error)?;
    let segs = segments(&rates);
    let m = py
        .detach(|| montecarlo::sample_indicators(&segs, t, &cfg))
        .map_err(value_error)?;
    Ok((0..m.samples())
        .map(|s| (0..m.events()).map(|j| m.get(s, j)).collect())
        .collect())
}

#[pymodule]
fn rbd_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModel>()?;
    m.add_class::<PyEstimate>()?;
    m.add_function(wrap_pyfunction!(cdf, m)?)?;
    m.add_function(wrap_pyfunction!(reliability, m)?)?;
    m.add_function(wrap_pyfunction!(series_reliability, m)?)?;
    m.add_function(wrap_pyfunction!(series_min_bound, m)?)?;
    m.add_function(wrap_pyfunction!(parallel_reliability, m)?)?;
    m.add_function(wrap_pyfunction!(pipeline_reliability, m)?)?;
    m.add_function(wrap_pyfunction!(check_independence, m)?)?;
    m.add_function(wrap_pyfunction!(sample_indicators, m)?)?;
    Ok(())
}
