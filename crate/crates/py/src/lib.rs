//! Python bindings: configs, bands, Hamiltonians, propagation and the four
//! scenario runners. Energies are in rad/ns unless a name ends in `_ghz`.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use pyo3::exceptions::{PyIndexError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use fluxsim::basis::{build_annealer_basis, build_single_qubit_basis};
use fluxsim::continuum::{build_band, calibrate_coupling, BandShape};
use fluxsim::observe::PopulationTrace;
use fluxsim::operators::{assemble_annealer, assemble_single_qubit};
use fluxsim::propagate::{evolve_static, evolve_timedep, PropagationOptions};
use fluxsim::scenarios::config::{parse_config_str, parse_config_with, ConfigError};
use fluxsim::scenarios::run;
use fluxsim::{Basis, Error, GravononBand, HermitianOperator, WaveFunctional};

fn err(e: Error) -> PyErr {
    match e {
        Error::Config(c) => config_err(c),
        Error::InvalidArgument(_) | Error::DimensionMismatch { .. } | Error::BasisMismatch(_) => {
            PyValueError::new_err(e.to_string())
        }
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn config_err(e: ConfigError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py(py: Python<'_>, value: &serde_json::Value) -> PyObject {
    use serde_json::Value;
    match value {
        Value::Null => py.None(),
        Value::Bool(b) => b.into_py(py),
        Value::Number(n) => match n.as_i64() {
            Some(i) => i.into_py(py),
            None => n.as_f64().unwrap_or(f64::NAN).into_py(py),
        },
        Value::String(s) => s.into_py(py),
        Value::Array(a) => PyList::new_bound(py, a.iter().map(|v| to_py(py, v))).into_py(py),
        Value::Object(o) => {
            let d = PyDict::new_bound(py);
            for (k, v) in o {
                d.set_item(k, to_py(py, v)).unwrap();
            }
            d.into_py(py)
        }
    }
}

fn summary_to_py<T: serde::Serialize>(py: Python<'_>, summary: &T) -> PyResult<PyObject> {
    let v = serde_json::to_value(summary).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(to_py(py, &v))
}

fn trace_to_py(py: Python<'_>, trace: &PopulationTrace) -> PyResult<PyObject> {
    let d = PyDict::new_bound(py);
    d.set_item("time_ns", trace.times.clone())?;
    for (k, v) in &trace.series {
        d.set_item(k, v.clone())?;
    }
    Ok(d.into_py(py))
}

/// Validated scenario configuration.
#[pyclass(name = "Config", module = "pyfluxsim")]
#[derive(Clone)]
struct PyConfig {
    inner: fluxsim::scenarios::Config,
}

#[pymethods]
impl PyConfig {
    /// Defaults, optionally with `key=value` overrides.
    #[new]
    #[pyo3(signature = (overrides = Vec::new()))]
    fn new(overrides: Vec<String>) -> PyResult<Self> {
        Ok(Self { inner: parse_config_str("", &overrides).map_err(config_err)? })
    }

    #[staticmethod]
    #[pyo3(signature = (text, overrides = Vec::new()))]
    fn from_toml(text: &str, overrides: Vec<String>) -> PyResult<Self> {
        Ok(Self { inner: parse_config_str(text, &overrides).map_err(config_err)? })
    }

    #[staticmethod]
    #[pyo3(signature = (path, overrides = Vec::new()))]
    fn from_file(path: PathBuf, overrides: Vec<String>) -> PyResult<Self> {
        Ok(Self { inner: parse_config_with(&path, &overrides).map_err(config_err)? })
    }

    /// A copy with further overrides applied.
    fn with_overrides(&self, overrides: Vec<String>) -> PyResult<Self> {
        Self::from_toml(&self.to_toml(), overrides)
    }

    fn to_toml(&self) -> String {
        self.inner.to_annotated_toml()
    }

    fn __repr__(&self) -> String {
        format!("Config(seed={}, t_final={})", self.inner.seed, self.inner.annealer.schedule.t_final)
    }
}

/// Discretized flat band.
#[pyclass(name = "GravononBand", module = "pyfluxsim")]
#[derive(Clone)]
struct PyBand {
    inner: GravononBand,
}

#[pymethods]
impl PyBand {
    #[new]
    fn new(n_modes: usize, center: f64, halfwidth: f64, coupling: f64) -> PyResult<Self> {
        Ok(Self { inner: build_band(n_modes, center, halfwidth, coupling).map_err(err)? })
    }

    /// Band whose coupling gives the golden-rule `lifetime` (ns).
    #[staticmethod]
    fn calibrated(n_modes: usize, center: f64, halfwidth: f64, lifetime: f64) -> PyResult<Self> {
        let shape = BandShape { n_modes, center, halfwidth };
        let w = calibrate_coupling(shape, lifetime).map_err(err)?;
        Self::new(n_modes, center, halfwidth, w)
    }

    #[getter]
    fn energies(&self) -> Vec<f64> {
        self.inner.energies().to_vec()
    }

    #[getter]
    fn coupling(&self) -> f64 {
        self.inner.coupling()
    }

    fn density_of_states(&self) -> f64 {
        self.inner.density_of_states()
    }

    fn golden_rule_width(&self) -> f64 {
        self.inner.golden_rule_width()
    }

    fn recurrence_time(&self) -> f64 {
        self.inner.recurrence_time()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

#[pyclass(name = "Basis", module = "pyfluxsim")]
#[derive(Clone)]
struct PyBasis {
    inner: Arc<Basis>,
}

#[pymethods]
impl PyBasis {
    #[staticmethod]
    fn single_qubit(n_kappa: usize, n_lambda: usize) -> PyResult<Self> {
        Ok(Self { inner: Arc::new(build_single_qubit_basis(n_kappa, n_lambda).map_err(err)?) })
    }

    #[staticmethod]
    fn annealer(n_phonon_max: usize, n_gravonon: usize) -> Self {
        Self { inner: Arc::new(build_annealer_basis(n_phonon_max, n_gravonon)) }
    }

    fn label(&self, index: usize) -> PyResult<String> {
        self.inner.get(index).map(|c| c.to_string()).ok_or_else(|| PyIndexError::new_err(index))
    }

    fn labels(&self) -> Vec<String> {
        self.inner.configurations().iter().map(|c| c.to_string()).collect()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

#[pyclass(name = "Hamiltonian", module = "pyfluxsim")]
#[derive(Clone)]
struct PyHamiltonian {
    inner: HermitianOperator,
}

#[pymethods]
impl PyHamiltonian {
    /// Single-qubit Hamiltonian of `config`.
    #[staticmethod]
    fn single_qubit(config: &PyConfig) -> PyResult<Self> {
        let params = config.inner.single_qubit_params().map_err(err)?;
        let basis = Arc::new(build_single_qubit_basis(params.kappa_band.len(), params.lambda_band.len()).map_err(err)?);
        Ok(Self { inner: assemble_single_qubit(&params, &basis).map_err(err)? })
    }

    /// Annealer Hamiltonian at time `t`, optionally with the phonon and
    /// the gravonon band of `config`.
    #[staticmethod]
    #[pyo3(signature = (config, t, phonon = false, gravonon = false))]
    fn annealer(config: &PyConfig, t: f64, phonon: bool, gravonon: bool) -> PyResult<Self> {
        let c = &config.inner;
        let mut params = c.annealer_params().map_err(err)?;
        let mut nph = 0;
        let mut ng = 0;
        if phonon {
            params.phonon = Some(c.phonon_params());
            nph = c.phonon.n_max;
        }
        if gravonon {
            let g = c.gravonon_coupling().map_err(err)?;
            ng = g.band.len();
            params.gravonon = Some(g);
        }
        let basis = Arc::new(build_annealer_basis(nph, ng));
        Ok(Self { inner: assemble_annealer(&params, &basis, t).map_err(err)? })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn basis(&self) -> PyBasis {
        PyBasis { inner: self.inner.basis().clone() }
    }

    fn eigenvalues(&self) -> Vec<f64> {
        self.inner.eigenvalues()
    }

    fn hermiticity_residual(&self) -> f64 {
        self.inner.hermiticity_residual()
    }

    /// Number of stored entries per term.
    fn term_counts(&self) -> BTreeMap<String, usize> {
        self.inner.term_counts().into_iter().map(|(k, v)| (format!("{k:?}"), v)).collect()
    }

    /// Probabilities of every basis state at `times`, starting in basis
    /// state `initial`. Uses diagonalization when `dt` is None and the
    /// Krylov propagator with step `dt` otherwise.
    #[pyo3(signature = (initial, times, dt = None))]
    fn evolve(&self, initial: usize, times: Vec<f64>, dt: Option<f64>) -> PyResult<Vec<Vec<f64>>> {
        let psi0 = WaveFunctional::basis_state(self.inner.basis().clone(), initial).map_err(err)?;
        let states = match dt {
            None => evolve_static(&self.inner, &psi0, &times).map_err(err)?.states,
            Some(dt) => {
                let mut out = Vec::with_capacity(times.len());
                let mut psi = psi0;
                let mut t = 0.0;
                for &target in &times {
                    let opts = PropagationOptions { stride: usize::MAX, ..Default::default() };
                    if target != t {
                        psi = evolve_timedep(&self.inner, &psi, t, target, dt, opts).map_err(err)?.final_state().unwrap().clone();
                        t = target;
                    }
                    out.push(psi.clone());
                }
                out
            }
        };
        Ok(states.iter().map(|s| s.probabilities()).collect())
    }
}

#[pyfunction]
fn ghz(value: f64) -> f64 {
    fluxsim::units::ghz(value)
}

#[pyfunction]
fn to_ghz(value: f64) -> f64 {
    fluxsim::units::to_ghz(value)
}

/// Ramsey experiment: `{"summary", "traces", "spectral"}`.
#[pyfunction]
fn run_ramsey(py: Python<'_>, config: &PyConfig) -> PyResult<PyObject> {
    let o = py.allow_threads(|| run::run_ramsey(&config.inner)).map_err(err)?;
    let d = PyDict::new_bound(py);
    d.set_item("summary", summary_to_py(py, &o.summary)?)?;
    d.set_item("traces", trace_to_py(py, &o.traces)?)?;
    let s = PyDict::new_bound(py);
    s.set_item("energies", o.spectral.energies.clone())?;
    s.set_item("weights", o.spectral.weights.clone())?;
    d.set_item("spectral", s)?;
    Ok(d.into_py(py))
}

/// Plain anneal: `{"summary", "spectrum", "populations"}`.
#[pyfunction]
fn run_anneal(py: Python<'_>, config: &PyConfig) -> PyResult<PyObject> {
    let o = py.allow_threads(|| run::run_anneal(&config.inner)).map_err(err)?;
    let d = PyDict::new_bound(py);
    d.set_item("summary", summary_to_py(py, &o.summary)?)?;
    d.set_item("spectrum", o.spectrum.clone())?;
    d.set_item("populations", trace_to_py(py, &o.populations)?)?;
    Ok(d.into_py(py))
}

/// Anneal with the phonon: `{"summary", "populations", "currents"}`.
#[pyfunction]
fn run_anneal_phonon(py: Python<'_>, config: &PyConfig) -> PyResult<PyObject> {
    let o = py.allow_threads(|| run::run_anneal_phonon(&config.inner)).map_err(err)?;
    let d = PyDict::new_bound(py);
    d.set_item("summary", summary_to_py(py, &o.summary)?)?;
    d.set_item("populations", trace_to_py(py, &o.populations)?)?;
    d.set_item("currents", trace_to_py(py, &o.currents)?)?;
    Ok(d.into_py(py))
}

/// Anneal with phonon and gravonon band:
/// `{"summary", "populations", "currents", "occupation"}`.
#[pyfunction]
fn run_anneal_phonon_gravonon(py: Python<'_>, config: &PyConfig) -> PyResult<PyObject> {
    let o = py.allow_threads(|| run::run_anneal_phonon_gravonon(&config.inner)).map_err(err)?;
    let d = PyDict::new_bound(py);
    d.set_item("summary", summary_to_py(py, &o.summary)?)?;
    d.set_item("populations", trace_to_py(py, &o.populations)?)?;
    d.set_item("currents", trace_to_py(py, &o.currents)?)?;
    let occ = PyDict::new_bound(py);
    occ.set_item("time_ns", o.occupation.iter().map(|x| x.time).collect::<Vec<_>>())?;
    occ.set_item("ground", o.occupation.iter().map(|x| x.ground).collect::<Vec<_>>())?;
    occ.set_item("modes", o.occupation.iter().map(|x| x.modes.clone()).collect::<Vec<_>>())?;
    d.set_item("occupation", occ)?;
    Ok(d.into_py(py))
}

/// Runs a scenario by name and writes its CSV/JSON files into `out`.
#[pyfunction]
fn run_and_write(py: Python<'_>, scenario: &str, config: &PyConfig, out: PathBuf) -> PyResult<()> {
    let s = match scenario {
        "ramsey" => run::Scenario::Ramsey,
        "anneal" => run::Scenario::Anneal,
        "anneal-phonon" => run::Scenario::AnnealPhonon,
        "anneal-phonon-gravonon" => run::Scenario::AnnealPhononGravonon,
        other => return Err(PyValueError::new_err(format!("unknown scenario `{other}`"))),
    };
    py.allow_threads(|| run::run_and_write(s, &config.inner, &out)).map_err(err)
}

#[pymodule]
pub fn pyfluxsim(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConfig>()?;
    m.add_class::<PyBand>()?;
    m.add_class::<PyBasis>()?;
    m.add_class::<PyHamiltonian>()?;
    m.add_function(wrap_pyfunction!(ghz, m)?)?;
    m.add_function(wrap_pyfunction!(to_ghz, m)?)?;
    m.add_function(wrap_pyfunction!(run_ramsey, m)?)?;
    m.add_function(wrap_pyfunction!(run_anneal, m)?)?;
    m.add_function(wrap_pyfunction!(run_anneal_phonon, m)?)?;
    m.add_function(wrap_pyfunction!(run_anneal_phonon_gravonon, m)?)?;
    m.add_function(wrap_pyfunction!(run_and_write, m)?)?;
    Ok(())
}
