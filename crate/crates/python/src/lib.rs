//! Python bindings: configuration handling, single-sample and full
//! experiment runs, and the analytic expected-rate integral.
//!
//! Build the extension with `cargo build -p specshare-python --release`,
//! then import the produced cdylib as `specshare_py` (see
//! python/smoke_test.py for a loader).

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use specshare::error::Error;
use specshare::harness;
use specshare::rng::derive_seed;

fn to_py_err(e: Error) -> PyErr {
    match e {
        Error::Config(_) | Error::Infeasible(_) | Error::Domain(_) | Error::TooLarge(_) => {
            PyValueError::new_err(e.to_string())
        }
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

/// Simulator configuration. Construct with defaults, from a config file, or
/// from config text; override single keys with `set("section.key", "value")`.
#[pyclass(name = "SimConfig", from_py_object)]
#[derive(Clone)]
struct PySimConfig {
    inner: specshare::SimConfig,
}

#[pymethods]
impl PySimConfig {
    #[new]
    fn new() -> Self {
        PySimConfig {
            inner: specshare::SimConfig::default(),
        }
    }

    #[staticmethod]
    fn from_file(path: &str) -> PyResult<Self> {
        Ok(PySimConfig {
            inner: specshare::SimConfig::from_file(path).map_err(to_py_err)?,
        })
    }

    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        Ok(PySimConfig {
            inner: specshare::SimConfig::from_str_cfg(text).map_err(to_py_err)?,
        })
    }

    /// Override one `section.key` with a string value (same syntax as the
    /// config file).
    fn set(&mut self, key: &str, value: &str) -> PyResult<()> {
        self.inner.set(key, value).map_err(to_py_err)
    }

    /// Canonical config text (parseable by `from_text`).
    fn to_text(&self) -> String {
        self.inner.to_config_string()
    }

    fn validate(&self) -> PyResult<()> {
        self.inner.validate().map_err(to_py_err)
    }

    fn __repr__(&self) -> String {
        format!(
            "SimConfig(K={}, L={}, c={:?}, power={}, solver={}, samples={}, seed={})",
            self.inner.num_ops,
            self.inner.num_rbs,
            self.inner.rb_quota,
            self.inner.power_mode.as_str(),
            self.inner.solver.as_str(),
            self.inner.samples,
            self.inner.seed
        )
    }
}

fn trace_to_dict<'py>(py: Python<'py>, t: &harness::WelfareTrace) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("sample_id", t.sample_id)?;
    d.set_item("seed", t.seed)?;
    d.set_item("final_welfare", t.final_s)?;
    d.set_item("swaps", t.swaps_applied)?;
    d.set_item("proposals", t.proposals)?;
    d.set_item("rounds", t.rounds)?;
    d.set_item("trace", t.per_iteration_s.clone())?;
    Ok(d)
}

/// Run one seeded Monte Carlo sample; returns a dict with the welfare
/// trace, the final welfare and the solver counters.
#[pyfunction]
#[pyo3(signature = (config, sample_index = 0))]
fn run_sample<'py>(
    py: Python<'py>,
    config: &PySimConfig,
    sample_index: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let seed = derive_seed(config.inner.seed, sample_index as u64);
    let trace = harness::run_sample(&config.inner, sample_index, seed).map_err(to_py_err)?;
    trace_to_dict(py, &trace)
}

/// Run the full experiment; returns a dict with per-sample welfare values,
/// the welfare CDF and the aggregate statistics.
#[pyfunction]
fn run_experiment<'py>(py: Python<'py>, config: &PySimConfig) -> PyResult<Bound<'py, PyDict>> {
    let res = harness::run_experiment(&config.inner).map_err(to_py_err)?;
    let d = PyDict::new(py);
    d.set_item(
        "final_welfare",
        res.samples.iter().map(|t| t.final_s).collect::<Vec<_>>(),
    )?;
    d.set_item(
        "cdf_welfare",
        res.cdf.iter().map(|&(w, _)| w).collect::<Vec<_>>(),
    )?;
    d.set_item(
        "cdf_prob",
        res.cdf.iter().map(|&(_, p)| p).collect::<Vec<_>>(),
    )?;
    d.set_item("mean_welfare", res.mean_welfare)?;
    d.set_item("median_welfare", harness::welfare_quantile(&res, 0.5))?;
    d.set_item("per_op_welfare", res.per_op_welfare)?;
    d.set_item("num_ops", res.num_ops)?;
    Ok(d)
}

/// Run the experiment and write samples.csv, cdf.csv, trace.csv and
/// summary.txt into `out_dir`; returns the written paths.
#[pyfunction]
fn run_and_emit(config: &PySimConfig, out_dir: &str) -> PyResult<Vec<String>> {
    let res = harness::run_experiment(&config.inner).map_err(to_py_err)?;
    let files = harness::emit_results(&res, &config.inner, std::path::Path::new(out_dir))
        .map_err(to_py_err)?;
    Ok(files.into_iter().map(|p| p.display().to_string()).collect())
}

/// Pathloss in dB at distance `d` meters under the configured model.
#[pyfunction]
fn pathloss_db(d: f64, config: &PySimConfig) -> f64 {
    specshare::channel::pathloss_db(d, &config.inner)
}

/// Analytic expected rate (bits/s/Hz) of a link through an interferer
/// field: intensity per m², own transmit power in watts, mean sqrt of the
/// interferer power draws, and the link distance in meters.
#[pyfunction]
fn expected_rate_ppp(lambda: f64, p_f: f64, mean_sqrt_power: f64, r_ff: f64) -> PyResult<f64> {
    specshare::rates::expected_rate_ppp(lambda, p_f, mean_sqrt_power, r_ff).map_err(to_py_err)
}

/// Stability/learning property suite; returns {name: passed}.
#[pyfunction]
#[pyo3(signature = (seed = 7))]
fn verify<'py>(py: Python<'py>, seed: u64) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    for check in harness::verify::run_verify(seed) {
        d.set_item(check.name, check.passed)?;
    }
    Ok(d)
}

#[pymodule]
fn specshare_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PySimConfig>()?;
    m.add_function(wrap_pyfunction!(run_sample, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(run_and_emit, m)?)?;
    m.add_function(wrap_pyfunction!(pathloss_db, m)?)?;
    m.add_function(wrap_pyfunction!(expected_rate_ppp, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
