//! Python bindings for the qwalk core.
//!
//! Configurations (evolution, trajectories, sweeps) cross the boundary as
//! JSON strings or plain dicts; results come back as Python objects.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use serde::de::DeserializeOwned;

use qwalk_core::analytic;
use qwalk_core::integrator::{self, EvolutionConfig, TrajectoryConfig};
use qwalk_core::model::{self, InitialKind};
use qwalk_core::{sweep, Error};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Config(_) => PyValueError::new_err(e.to_string()),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

/// Parse a JSON string or a dict (via `json.dumps`) into a config type.
fn config_from<T: DeserializeOwned + Default>(obj: Option<&Bound<'_, PyAny>>) -> PyResult<T> {
    let Some(obj) = obj else {
        return Ok(T::default());
    };
    let text: String = if let Ok(s) = obj.extract::<String>() {
        s
    } else {
        let json = obj.py().import("json")?;
        json.call_method1("dumps", (obj,))?.extract()?
    };
    serde_json::from_str(&text).map_err(|e| PyValueError::new_err(e.to_string()))
}

fn initial_kind(name: &str) -> PyResult<InitialKind> {
    match name {
        "fock" => Ok(InitialKind::Fock),
        "coherent" => Ok(InitialKind::Coherent),
        other => Err(PyValueError::new_err(format!(
            "initial_state must be 'fock' or 'coherent', got {other:?}"
        ))),
    }
}

/// Couplings, drive, detuning, decay, dephasing and starting photon number.
#[pyclass(name = "SystemParams", from_py_object)]
#[derive(Clone)]
struct PySystemParams {
    inner: model::SystemParams,
}

#[pymethods]
impl PySystemParams {
    #[new]
    #[pyo3(signature = (couplings, drive, detuning=0.0, qubit_decay=0.0, qubit_dephase=0.0, initial_photon=0))]
    fn new(
        couplings: Vec<f64>,
        drive: f64,
        detuning: f64,
        qubit_decay: f64,
        qubit_dephase: f64,
        initial_photon: u32,
    ) -> PyResult<Self> {
        let inner = model::SystemParams {
            couplings,
            drive,
            detuning,
            qubit_decay,
            qubit_dephase,
            initial_photon,
        };
        inner.validate().map_err(py_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn couplings(&self) -> Vec<f64> {
        self.inner.couplings.clone()
    }
    #[getter]
    fn drive(&self) -> f64 {
        self.inner.drive
    }
    #[getter]
    fn detuning(&self) -> f64 {
        self.inner.detuning
    }
    #[getter]
    fn qubit_decay(&self) -> f64 {
        self.inner.qubit_decay
    }
    #[getter]
    fn qubit_dephase(&self) -> f64 {
        self.inner.qubit_dephase
    }
    #[getter]
    fn initial_photon(&self) -> u32 {
        self.inner.initial_photon
    }

    /// Ω/2g in 1D, v/(v + v′ + v″) in 2D.
    fn figure_abscissa(&self) -> f64 {
        self.inner.figure_abscissa()
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.inner).expect("params serialize")
    }

    fn __repr__(&self) -> String {
        format!("SystemParams({})", self.to_json())
    }
}

/// Decay-conditioned photon distribution of one run.
#[pyclass(name = "DecayRecord", from_py_object)]
#[derive(Clone)]
struct PyDecayRecord {
    inner: integrator::DecayRecord,
}

#[pymethods]
impl PyDecayRecord {
    #[getter]
    fn truncations(&self) -> Vec<usize> {
        self.inner.truncations.clone()
    }
    /// Joint distribution, row-major over the modes.
    #[getter]
    fn decayed(&self) -> Vec<f64> {
        self.inner.decayed.clone()
    }
    #[getter]
    fn surviving_trace(&self) -> f64 {
        self.inner.surviving_trace
    }
    #[getter]
    fn elapsed_time(&self) -> f64 {
        self.inner.elapsed_time
    }
    #[getter]
    fn steps(&self) -> usize {
        self.inner.steps
    }
    #[getter]
    fn dt(&self) -> f64 {
        self.inner.dt
    }
    #[getter]
    fn stop(&self) -> String {
        format!("{:?}", self.inner.stop).to_lowercase()
    }

    fn total_decayed(&self) -> f64 {
        self.inner.total_decayed()
    }

    fn marginal(&self, mode: usize) -> PyResult<Vec<f64>> {
        if mode >= self.inner.modes() {
            return Err(PyValueError::new_err("mode out of range"));
        }
        Ok(self.inner.marginal(mode))
    }

    fn average_photon(&self, mode: usize) -> PyResult<f64> {
        if mode >= self.inner.modes() {
            return Err(PyValueError::new_err("mode out of range"));
        }
        self.inner.average_photon(mode).map_err(py_err)
    }

    fn mean_photons(&self) -> PyResult<Vec<f64>> {
        self.inner.mean_photons().map_err(py_err)
    }
}

/// Run `f` without the GIL from the initial state, growing a default
/// truncation while the leakage guard trips.
fn simulate<T: Send>(
    py: Python<'_>,
    params: &PySystemParams,
    initial_state: &str,
    truncation: Option<Vec<usize>>,
    f: impl Fn(&model::DensityMatrix) -> qwalk_core::Result<T> + Send + Sync,
) -> PyResult<T> {
    let kind = initial_kind(initial_state)?;
    let p = &params.inner;
    py.detach(|| integrator::with_adaptive_truncation(p, kind, truncation.as_deref(), f))
        .map_err(py_err)
}

/// Integrate until the qubit has decayed.
#[pyfunction]
#[pyo3(signature = (params, initial_state="fock", truncation=None, evolution=None))]
fn run_to_decay(
    py: Python<'_>,
    params: &PySystemParams,
    initial_state: &str,
    truncation: Option<Vec<usize>>,
    evolution: Option<&Bound<'_, PyAny>>,
) -> PyResult<PyDecayRecord> {
    let cfg: EvolutionConfig = config_from(evolution)?;
    let p = params.inner.clone();
    let inner = simulate(py, params, initial_state, truncation, |rho0| {
        integrator::run_to_decay(&p, rho0, &cfg)
    })?;
    Ok(PyDecayRecord { inner })
}

/// Richardson-extrapolated ⟨N⟩ per mode: (values, error estimate, finest record).
#[pyfunction]
#[pyo3(signature = (params, initial_state="fock", truncation=None, evolution=None))]
fn richardson_run(
    py: Python<'_>,
    params: &PySystemParams,
    initial_state: &str,
    truncation: Option<Vec<usize>>,
    evolution: Option<&Bound<'_, PyAny>>,
) -> PyResult<(Vec<f64>, f64, PyDecayRecord)> {
    let cfg: EvolutionConfig = config_from(evolution)?;
    let p = params.inner.clone();
    let r = simulate(py, params, initial_state, truncation, |rho0| {
        integrator::richardson_run(&p, rho0, &cfg)
    })?;
    Ok((r.values, r.error, PyDecayRecord { inner: r.record }))
}

/// Quantum-jump Monte Carlo; returns a dict of summary statistics.
#[pyfunction]
#[pyo3(signature = (params, initial_state="fock", truncation=None, trajectories=None, evolution=None))]
fn jump_monte_carlo<'py>(
    py: Python<'py>,
    params: &PySystemParams,
    initial_state: &str,
    truncation: Option<Vec<usize>>,
    trajectories: Option<&Bound<'py, PyAny>>,
    evolution: Option<&Bound<'py, PyAny>>,
) -> PyResult<Bound<'py, PyDict>> {
    let traj: TrajectoryConfig = config_from(trajectories)?;
    let cfg: EvolutionConfig = config_from(evolution)?;
    let p = params.inner.clone();
    let r = simulate(py, params, initial_state, truncation, |rho0| {
        integrator::jump_monte_carlo(&p, rho0, &traj, &cfg)
    })?;
    let d = PyDict::new(py);
    d.set_item("mean_photons", r.mean_photons)?;
    d.set_item("mean_photon_stderr", r.mean_photon_stderr)?;
    d.set_item("stderr", r.stderr)?;
    d.set_item("trajectories", r.trajectories)?;
    d.set_item("jumped", r.jumped)?;
    d.set_item("jump_dt", r.jump_dt)?;
    d.set_item("record", PyDecayRecord { inner: r.record })?;
    Ok(d)
}

/// Closed-form ⟨Δn_α⟩ (threshold in 1D, piecewise formulas in 2D).
#[pyfunction]
fn analytic_displacement(params: &PySystemParams) -> PyResult<Vec<f64>> {
    analytic::analytic_displacement(&params.inner).map_err(py_err)
}

#[pyfunction]
fn analytic_2d(params: &PySystemParams) -> PyResult<(f64, f64)> {
    analytic::analytic_2d(&params.inner).map_err(py_err)
}

/// ⟨Δn_α⟩ from the winding of A_k = v + Σ v_β e^{−ik_β}.
#[pyfunction]
#[pyo3(signature = (v, inter, alpha=0, resolution=1024))]
fn winding_displacement(v: f64, inter: Vec<f64>, alpha: usize, resolution: usize) -> PyResult<f64> {
    analytic::winding_displacement(v, &inter, alpha, resolution).map_err(py_err)
}

#[pyfunction]
fn classical_displacement(v: f64, v_prime: f64) -> PyResult<f64> {
    analytic::classical_displacement(v, v_prime).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (v, v_prime, gamma, span=200))]
fn classical_walk_oracle(v: f64, v_prime: f64, gamma: f64, span: usize) -> PyResult<f64> {
    analytic::classical_walk_oracle(v, v_prime, gamma, span).map_err(py_err)
}

/// (all_unbroken, min_coupling, intra_dominates) of the momentum-space spectrum.
#[pyfunction]
#[pyo3(signature = (params, k_samples=256))]
fn pt_spectrum(params: &PySystemParams, k_samples: usize) -> PyResult<(bool, f64, bool)> {
    let pt = analytic::pt_spectrum(&params.inner, k_samples).map_err(py_err)?;
    Ok((pt.all_unbroken, pt.min_coupling, pt.intra_dominates))
}

/// JSON sweep spec of a built-in figure preset.
#[pyfunction]
fn preset(name: &str) -> PyResult<String> {
    sweep::preset(name).map(|s| s.to_json()).map_err(py_err)
}

/// Run a sweep given as JSON (or dict); returns (csv text, any cell failed).
#[pyfunction]
#[pyo3(signature = (spec, threads=None, strict_bitrepro=false))]
fn run_sweep(
    py: Python<'_>,
    spec: &Bound<'_, PyAny>,
    threads: Option<usize>,
    strict_bitrepro: bool,
) -> PyResult<(String, bool)> {
    let text: String = match spec.extract::<String>() {
        Ok(s) => s,
        Err(_) => py
            .import("json")?
            .call_method1("dumps", (spec,))?
            .extract()?,
    };
    let spec = sweep::SweepSpec::from_json(&text).map_err(py_err)?;
    let options = sweep::RunOptions {
        threads,
        strict_bitrepro,
    };
    let result = py
        .detach(|| sweep::run_sweep(&spec, &options))
        .map_err(py_err)?;
    let mut buf = Vec::new();
    sweep::write_csv(&result, &mut buf).map_err(py_err)?;
    let csv = String::from_utf8(buf).expect("CSV output is UTF-8");
    Ok((csv, result.any_failed()))
}

#[pymodule]
pub fn qwalk(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySystemParams>()?;
    m.add_class::<PyDecayRecord>()?;
    m.add_function(wrap_pyfunction!(run_to_decay, m)?)?;
    m.add_function(wrap_pyfunction!(richardson_run, m)?)?;
    m.add_function(wrap_pyfunction!(jump_monte_carlo, m)?)?;
    m.add_function(wrap_pyfunction!(analytic_displacement, m)?)?;
    m.add_function(wrap_pyfunction!(analytic_2d, m)?)?;
    m.add_function(wrap_pyfunction!(winding_displacement, m)?)?;
    m.add_function(wrap_pyfunction!(classical_displacement, m)?)?;
    m.add_function(wrap_pyfunction!(classical_walk_oracle, m)?)?;
    m.add_function(wrap_pyfunction!(pt_spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(preset, m)?)?;
    m.add_function(wrap_pyfunction!(run_sweep, m)?)?;
    m.add("SCHEME_ORDER", integrator::SCHEME_ORDER)?;
    Ok(())
}
