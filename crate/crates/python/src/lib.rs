//! Python bindings: scenarios, gain synthesis, Lambert guidance, closed-loop
//! simulation and the method comparison.

use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;

use srpctl_core::linalg::{Matrix, Spectrum};
use srpctl_core::orbital::{self, LinearizationSign, PhysicalConstants, TransferDirection};
use srpctl_core::simulation::{self, SimulationError};
use srpctl_core::synthesis::{self, Weights};

create_exception!(srpctl, SrpctlError, PyException);

fn err(e: impl std::fmt::Display) -> PyErr {
    SrpctlError::new_err(e.to_string())
}

fn matrix(rows: Vec<Vec<f64>>) -> PyResult<Matrix> {
    Matrix::from_rows(&rows).map_err(|e| PyValueError::new_err(e.to_string()))
}

fn complex_list(s: &Spectrum) -> Vec<Complex64> {
    s.values().to_vec()
}

type Rows = Vec<Vec<f64>>;

fn sim_err(e: SimulationError) -> PyErr {
    match e {
        SimulationError::InvalidScenario(msg) => PyValueError::new_err(msg),
        other => err(other),
    }
}

/// Scenario description. Built from JSON (missing keys take defaults,
/// unknown keys are rejected).
#[pyclass(name = "Scenario")]
struct PyScenario {
    inner: simulation::Scenario,
}

#[pymethods]
impl PyScenario {
    #[new]
    #[pyo3(signature = (json = None))]
    fn new(json: Option<&str>) -> PyResult<Self> {
        let inner = match json {
            Some(text) => serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?,
            None => simulation::Scenario::default(),
        };
        inner.validate().map_err(sim_err)?;
        Ok(Self { inner })
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.inner).expect("scenario serializes")
    }

    /// Copy with the given method (`uncontrolled`, `lqr`, `observer_only`,
    /// `observer_lqr`).
    fn with_method(&self, method: &str) -> PyResult<Self> {
        let m: simulation::Method =
            serde_json::from_value(serde_json::Value::String(method.into())).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(Self { inner: self.inner.with_method(m) })
    }

    #[getter]
    fn horizon(&self) -> f64 {
        self.inner.horizon
    }

    #[getter]
    fn method(&self) -> &'static str {
        self.inner.method.name()
    }

    #[getter]
    fn x0(&self) -> [f64; 4] {
        self.inner.x0.to_array()
    }

    #[getter]
    fn xf(&self) -> [f64; 4] {
        self.inner.xf.to_array()
    }

    fn __repr__(&self) -> String {
        format!("Scenario(method={}, horizon={})", self.inner.method.name(), self.inner.horizon)
    }
}

/// Result of a closed-loop run.
#[pyclass(name = "SimulationRecord")]
struct PyRecord {
    inner: simulation::SimulationRecord,
    xf: orbital::OrbitState,
    settle_band: f64,
}

#[pymethods]
impl PyRecord {
    #[getter]
    fn method(&self) -> &'static str {
        self.inner.method.name()
    }

    #[getter]
    fn times(&self) -> Vec<f64> {
        self.inner.times.clone()
    }

    #[getter]
    fn true_states(&self) -> Vec<[f64; 4]> {
        self.inner.true_states.clone()
    }

    #[getter]
    fn estimates(&self) -> Option<Vec<[f64; 4]>> {
        self.inner.estimates.clone()
    }

    #[getter]
    fn controls(&self) -> Vec<[f64; 2]> {
        self.inner.controls.clone()
    }

    #[getter]
    fn reference(&self) -> Vec<[f64; 4]> {
        self.inner.reference.clone()
    }

    #[getter]
    fn estimation_error(&self) -> Option<Vec<[f64; 4]>> {
        self.inner.estimation_error.clone()
    }

    /// `(terminal_error, rms_error, control_energy, settling_time)`.
    fn metrics(&self) -> PyResult<(f64, f64, f64, Option<f64>)> {
        let m = simulation::compute_metrics(&self.inner, &self.xf, self.settle_band).map_err(sim_err)?;
        Ok((m.terminal_error, m.rms_error, m.control_energy, m.settling_time))
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

/// Plant matrices `(A, B, C)` linearized at radius `r0` (km).
#[pyfunction]
#[pyo3(signature = (r0, negative = false))]
fn linearize_plant(r0: f64, negative: bool) -> PyResult<(Rows, Rows, Rows)> {
    let sign = if negative { LinearizationSign::Negative } else { LinearizationSign::Positive };
    let p = orbital::linearize_plant(r0, &PhysicalConstants::default(), sign).map_err(err)?;
    Ok((p.a.to_rows(), p.b.to_rows(), p.c.to_rows()))
}

/// LQR gain: returns `(K, P, closed-loop poles)`.
#[pyfunction]
fn lqr_gain(
    a: Vec<Vec<f64>>,
    b: Vec<Vec<f64>>,
    q: Vec<Vec<f64>>,
    r: Vec<Vec<f64>>,
) -> PyResult<(Rows, Rows, Vec<Complex64>)> {
    let w = Weights { q: matrix(q)?, r: matrix(r)? };
    let res = synthesis::lqr_gain(&matrix(a)?, &matrix(b)?, &w).map_err(err)?;
    Ok((res.k.to_rows(), res.p.to_rows(), complex_list(&res.closed_loop_spectrum)))
}

/// State-feedback gain placing the eigenvalues of `A − BK` at `poles`.
#[pyfunction]
fn place_poles(a: Vec<Vec<f64>>, b: Vec<Vec<f64>>, poles: Vec<Complex64>) -> PyResult<Vec<Vec<f64>>> {
    let k = synthesis::place_poles(&matrix(a)?, &matrix(b)?, &Spectrum::new(poles)).map_err(err)?;
    Ok(k.to_rows())
}

/// Observer gain `L` placing `A − LC` at `speed_factor · base_poles`.
#[pyfunction]
fn observer_gain(
    a: Vec<Vec<f64>>,
    c: Vec<Vec<f64>>,
    speed_factor: f64,
    base_poles: Vec<Complex64>,
) -> PyResult<Vec<Vec<f64>>> {
    let d = synthesis::observer_gain(&matrix(a)?, &matrix(c)?, speed_factor, &Spectrum::new(base_poles)).map_err(err)?;
    Ok(d.l.to_rows())
}

/// Lambert transfer between planar positions (km) in `tof` seconds:
/// `(v1, v2)` in km/s.
#[pyfunction]
#[pyo3(signature = (r1, r2, tof, prograde = true))]
fn lambert(r1: [f64; 2], r2: [f64; 2], tof: f64, prograde: bool) -> PyResult<([f64; 2], [f64; 2])> {
    let dir = if prograde { TransferDirection::Prograde } else { TransferDirection::Retrograde };
    let sol = orbital::lambert_solve(r1, r2, tof, dir, &PhysicalConstants::default()).map_err(err)?;
    Ok((sol.v1, sol.v2))
}

/// Two-body propagation of `[p, q, ṗ, q̇]` over `dt` seconds.
#[pyfunction]
fn propagate_kepler(state: [f64; 4], dt: f64) -> PyResult<[f64; 4]> {
    let s = orbital::OrbitState::from_slice(&state);
    Ok(orbital::propagate_kepler(&s, dt, PhysicalConstants::default().mu).map_err(err)?.to_array())
}

#[pyfunction]
fn simulate(scenario: &PyScenario) -> PyResult<PyRecord> {
    let rec = simulation::run_scenario(&scenario.inner).map_err(sim_err)?;
    Ok(PyRecord { inner: rec, xf: scenario.inner.xf, settle_band: scenario.inner.settle_band })
}

/// All four methods on the scenario, as a JSON report.
#[pyfunction]
fn compare(scenario: &PyScenario) -> PyResult<String> {
    let report = simulation::compare_methods(&scenario.inner).map_err(sim_err)?;
    Ok(serde_json::to_string(&report).expect("report serializes"))
}

/// SRP-only drift of the scenario's initial orbit over `duration` seconds:
/// list of `(t, deviation, relative_error)`.
#[pyfunction]
fn drift_study(scenario: &PyScenario, duration: f64) -> PyResult<Vec<(f64, f64, f64)>> {
    let s = &scenario.inner;
    let study = simulation::srp_drift_study(duration, &s.spacecraft, &s.srp, &s.x0, &s.constants).map_err(sim_err)?;
    Ok(study.samples.iter().map(|p| (p.t, p.deviation, p.relative_error)).collect())
}

#[pymodule]
fn srpctl(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("SrpctlError", m.py().get_type::<SrpctlError>())?;
    m.add_class::<PyScenario>()?;
    m.add_class::<PyRecord>()?;
    m.add_function(wrap_pyfunction!(linearize_plant, m)?)?;
    m.add_function(wrap_pyfunction!(lqr_gain, m)?)?;
    m.add_function(wrap_pyfunction!(place_poles, m)?)?;
    m.add_function(wrap_pyfunction!(observer_gain, m)?)?;
    m.add_function(wrap_pyfunction!(lambert, m)?)?;
    m.add_function(wrap_pyfunction!(propagate_kepler, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(compare, m)?)?;
    m.add_function(wrap_pyfunction!(drift_study, m)?)?;
    Ok(())
}
