//! Python bindings. The extension module is named `mmia`.

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use mmia::config::SimConfig;
use mmia::experiments::{run_experiment as run_kind, ExperimentKind, Scenario};
use mmia::geometry::Point2D;
use mmia::protocol::{run_coordinated, run_exhaustive, IaTrialOutcome};

fn py_err(e: mmia::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Simulation configuration; parsed from TOML, empty text gives defaults.
#[pyclass(name = "Config", from_py_object)]
#[derive(Clone)]
struct PyConfig {
    inner: SimConfig,
}

#[pymethods]
impl PyConfig {
    #[new]
    #[pyo3(signature = (toml = ""))]
    fn new(toml: &str) -> PyResult<Self> {
        let inner = SimConfig::from_toml_str(toml).map_err(py_err)?;
        inner.validate().map_err(py_err)?;
        Ok(Self { inner })
    }

    fn to_toml(&self) -> String {
        self.inner.to_toml_string()
    }

    fn hash(&self) -> String {
        self.inner.hash()
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.experiments.seed
    }

    #[setter]
    fn set_seed(&mut self, v: u64) {
        self.inner.experiments.seed = v;
    }

    /// Trials per grid point for every experiment.
    #[getter]
    fn trials(&self) -> usize {
        self.inner.experiments.trials
    }

    #[setter]
    fn set_trials(&mut self, v: usize) {
        self.inner.experiments.trials = v;
        self.inner.experiments.p_los_trials = v;
    }

    #[getter]
    fn n_tx(&self) -> usize {
        self.inner.antenna.n_tx
    }

    #[setter]
    fn set_n_tx(&mut self, v: usize) {
        self.inner.antenna.n_tx = v;
    }

    #[getter]
    fn p_ue_dbm(&self) -> f64 {
        self.inner.link.p_ue_dbm
    }

    #[setter]
    fn set_p_ue_dbm(&mut self, v: f64) {
        self.inner.link.p_ue_dbm = v;
    }

    #[getter]
    fn p_blk(&self) -> f64 {
        self.inner.blocking.p_blk
    }

    #[setter]
    fn set_p_blk(&mut self, v: f64) {
        self.inner.blocking.p_blk = v;
    }

    #[getter]
    fn n_sc(&self) -> usize {
        self.inner.geometry.n_sc
    }

    #[setter]
    fn set_n_sc(&mut self, v: usize) {
        self.inner.geometry.n_sc = v;
    }

    fn __repr__(&self) -> String {
        format!("Config(hash={})", self.inner.hash())
    }
}

#[pyclass(name = "AntennaPattern", frozen)]
struct PyAntennaPattern {
    inner: mmia::antenna::AntennaPattern,
}

#[pymethods]
impl PyAntennaPattern {
    #[new]
    fn new(beamwidth_rad: f64) -> PyResult<Self> {
        Ok(Self {
            inner: mmia::antenna::AntennaPattern::new(beamwidth_rad).map_err(py_err)?,
        })
    }

    #[getter]
    fn g0(&self) -> f64 {
        self.inner.g0()
    }

    #[getter]
    fn g_sl(&self) -> f64 {
        self.inner.g_sl()
    }

    #[getter]
    fn main_lobe(&self) -> f64 {
        self.inner.phi_ml()
    }

    /// Gain in dB at an angular offset from boresight.
    fn gain(&self, offset_rad: f64) -> PyResult<f64> {
        self.inner.gain(offset_rad).map_err(py_err)
    }
}

/// Path loss in dB at distance `d` metres.
#[pyfunction]
fn pathloss(d: f64) -> PyResult<f64> {
    mmia::channel::pathloss(d).map_err(py_err)
}

#[pyfunction]
fn zadoff_chu(u: usize, n_zc: usize) -> PyResult<Vec<Complex64>> {
    Ok(mmia::preamble::generate_zc(u, n_zc).map_err(py_err)?.samples().to_vec())
}

/// Power-delay profile of `rx` against the root-`u` sequence of length `len(rx)`.
#[pyfunction]
fn pdp(rx: Vec<Complex64>, u: usize) -> PyResult<Vec<f64>> {
    let seq = mmia::preamble::generate_zc(u, rx.len()).map_err(py_err)?;
    Ok(mmia::preamble::compute_pdp(&rx, &seq).map_err(py_err)?.values().to_vec())
}

/// Distances to the three anchors from the angles they subtend at the UE.
#[pyfunction]
fn solve_distances(theta: [f64; 3], sides: [f64; 3]) -> PyResult<[f64; 3]> {
    mmia::estimation::solve_distances_with_sides(&theta, &sides).map_err(py_err)
}

#[pyfunction]
fn locate_ue(distances: [f64; 3], anchors: [(f64, f64); 3]) -> (f64, f64) {
    let a = anchors.map(|(x, y)| Point2D::new(x, y));
    let p = mmia::estimation::locate_ue(&distances, &a);
    (p.x, p.y)
}

fn outcome_dict<'py>(py: Python<'py>, o: &IaTrialOutcome) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("scheme", o.scheme.to_string())?;
    d.set_item("success", o.success)?;
    d.set_item("slots_used", o.slots_used)?;
    d.set_item("ia_time", o.ia_time)?;
    d.set_item("rounds", o.rounds)?;
    d.set_item("detecting_cell", o.detecting_cell)?;
    d.set_item("detecting_pair", o.detecting_pair)?;
    d.set_item("estimated_ue", o.estimated_ue.map(|p| (p.x, p.y)))?;
    Ok(d)
}

/// Both schemes on one trial: `(exhaustive, coordinated)` dicts.
#[pyfunction]
#[pyo3(signature = (config, index = 0))]
fn single_trial<'py>(
    py: Python<'py>,
    config: &PyConfig,
    index: u64,
) -> PyResult<(Bound<'py, PyDict>, Bound<'py, PyDict>)> {
    let setup = Scenario::new(&config.inner, 0).and_then(|s| s.trial(index)).map_err(py_err)?;
    Ok((outcome_dict(py, &run_exhaustive(&setup))?, outcome_dict(py, &run_coordinated(&setup))?))
}

/// Runs an experiment by output name and returns its table as a dict.
#[pyfunction]
fn run_experiment<'py>(py: Python<'py>, name: &str, config: &PyConfig) -> PyResult<Bound<'py, PyDict>> {
    let kind = ExperimentKind::ALL
        .into_iter()
        .find(|k| k.name() == name)
        .ok_or_else(|| PyValueError::new_err(format!("unknown experiment `{name}`")))?;
    let table = run_kind(kind, &config.inner).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("name", &table.name)?;
    d.set_item("columns", &table.columns)?;
    d.set_item("rows", &table.rows)?;
    d.set_item("config_hash", &table.config_hash)?;
    d.set_item("seed", table.seed)?;
    Ok(d)
}

#[pyfunction]
fn experiment_names() -> Vec<&'static str> {
    ExperimentKind::ALL.iter().map(|k| k.name()).collect()
}

/// Oracle suite as `(name, passed, detail)` tuples.
#[pyfunction]
fn selftest(config: &PyConfig) -> PyResult<Vec<(String, bool, String)>> {
    let checks = mmia::selftest::run_all(&config.inner).map_err(py_err)?;
    Ok(checks.into_iter().map(|c| (c.name, c.passed, c.detail)).collect())
}

#[pymodule]
#[pyo3(name = "mmia")]
pub fn mmia_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConfig>()?;
    m.add_class::<PyAntennaPattern>()?;
    m.add_function(wrap_pyfunction!(pathloss, m)?)?;
    m.add_function(wrap_pyfunction!(zadoff_chu, m)?)?;
    m.add_function(wrap_pyfunction!(pdp, m)?)?;
    m.add_function(wrap_pyfunction!(solve_distances, m)?)?;
    m.add_function(wrap_pyfunction!(locate_ue, m)?)?;
    m.add_function(wrap_pyfunction!(single_trial, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(experiment_names, m)?)?;
    m.add_function(wrap_pyfunction!(selftest, m)?)?;
    Ok(())
}
