//! Python bindings: scenario numerics, link model, Monte Carlo and the Fock
//! oracle. Structured results come back as plain dicts.

use covsense::error::Error;
use covsense::estimation::{estimation_report, ReportInputs};
use covsense::fock::{oracle_qre, oracle_willie_state};
use covsense::link::{self, BoundSettings, LinkGeometry};
use covsense::montecarlo::{exact_estimator_mse, simulate_heterodyne_mse};
use covsense::qre::{covert_budget, taylor_c2, taylor_c3, willie_qre};
use covsense::scenario::{alice_cm, willie_cm, ProbeSettings, SensingScenario};
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyBool, PyDict, PyList, PyString};
use serde::Serialize;
use serde_json::Value;

create_exception!(covsense_py, CovsenseError, PyValueError);

fn err(e: Error) -> PyErr {
    CovsenseError::new_err(format!("{}: {}", e.kind(), e))
}

fn value_to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => PyBool::new(py, *b).to_owned().into_any(),
        Value::Number(n) => match (n.as_u64(), n.as_i64()) {
            (Some(u), _) => u.into_pyobject(py)?.into_any(),
            (None, Some(i)) => i.into_pyobject(py)?.into_any(),
            _ => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any(),
        },
        Value::String(s) => PyString::new(py, s).into_any(),
        Value::Array(a) => {
            let l = PyList::empty(py);
            for x in a {
                l.append(value_to_py(py, x)?)?;
            }
            l.into_any()
        }
        Value::Object(m) => {
            let d = PyDict::new(py);
            for (k, x) in m {
                d.set_item(k, value_to_py(py, x)?)?;
            }
            d.into_any()
        }
    })
}

fn to_py<'py, T: Serialize>(py: Python<'py>, x: &T) -> PyResult<Bound<'py, PyAny>> {
    let v = serde_json::to_value(x).map_err(|e| PyValueError::new_err(e.to_string()))?;
    value_to_py(py, &v)
}

fn matrix(cm: &covsense::gaussian::CovarianceMatrix) -> Vec<Vec<f64>> {
    let m = cm.entries();
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

/// Round-trip thermal-loss scenario.
#[pyclass(name = "Scenario", frozen)]
struct PyScenario {
    inner: SensingScenario,
}

#[pymethods]
impl PyScenario {
    #[new]
    fn new(eta1: f64, eta2: f64, nb1: f64, nb2: f64) -> PyResult<Self> {
        Ok(PyScenario {
            inner: SensingScenario::new(eta1, eta2, nb1, nb2).map_err(err)?,
        })
    }

    #[staticmethod]
    fn symmetric(eta: f64, nb: f64) -> PyResult<Self> {
        Ok(PyScenario {
            inner: SensingScenario::symmetric(eta, nb).map_err(err)?,
        })
    }

    #[getter]
    fn eta1(&self) -> f64 {
        self.inner.eta1
    }

    #[getter]
    fn eta2(&self) -> f64 {
        self.inner.eta2
    }

    #[getter]
    fn nb1(&self) -> f64 {
        self.inner.nb1
    }

    #[getter]
    fn nb2(&self) -> f64 {
        self.inner.nb2
    }

    /// `(eta_eff, nb_eff)`.
    fn effective(&self) -> (f64, f64) {
        let e = self.inner.effective();
        (e.eta_eff, e.nb_eff)
    }

    fn c2(&self) -> PyResult<f64> {
        taylor_c2(&self.inner).map_err(err)
    }

    fn c3(&self) -> PyResult<f64> {
        taylor_c3(&self.inner).map_err(err)
    }

    #[pyo3(signature = (ns, theta = 0.0))]
    fn willie_qre(&self, ns: f64, theta: f64) -> PyResult<f64> {
        willie_qre(&self.inner, ns, theta).map_err(err)
    }

    #[pyo3(signature = (ns, theta = 0.0))]
    fn willie_cm(&self, ns: f64, theta: f64) -> PyResult<Vec<Vec<f64>>> {
        Ok(matrix(&willie_cm(&self.inner, ns, theta).map_err(err)?))
    }

    fn alice_cm(&self, ns: f64, nlo: f64, theta: f64) -> PyResult<Vec<Vec<f64>>> {
        let p = ProbeSettings::new(ns, nlo, theta).map_err(err)?;
        Ok(matrix(&alice_cm(&self.inner, &p).map_err(err)?))
    }

    fn covert_budget<'py>(
        &self,
        py: Python<'py>,
        epsilon: f64,
        n: u64,
    ) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &covert_budget(&self.inner, epsilon, n).map_err(err)?)
    }

    #[pyo3(signature = (epsilon = 1e-3, bandwidth = 3e12, bandwidth_coh = None, time = 1.0, nlo = 1e6))]
    fn bounds<'py>(
        &self,
        py: Python<'py>,
        epsilon: f64,
        bandwidth: f64,
        bandwidth_coh: Option<f64>,
        time: f64,
        nlo: f64,
    ) -> PyResult<Bound<'py, PyAny>> {
        let inp = ReportInputs {
            epsilon,
            bandwidth_ase: bandwidth,
            bandwidth_coh: bandwidth_coh.unwrap_or(bandwidth),
            time,
            nlo,
        };
        to_py(py, &estimation_report(&self.inner, &inp).map_err(err)?)
    }

    #[pyo3(signature = (theta, epsilon, n, trials, seed = 0))]
    fn simulate_mse<'py>(
        &self,
        py: Python<'py>,
        theta: f64,
        epsilon: f64,
        n: u64,
        trials: usize,
        seed: u64,
    ) -> PyResult<Bound<'py, PyAny>> {
        let r = py
            .detach(|| simulate_heterodyne_mse(&self.inner, theta, epsilon, n, trials, seed))
            .map_err(err)?;
        let exact = exact_estimator_mse(r.sigma_het_sq).map_err(err)?;
        let out = to_py(py, &r)?;
        out.set_item("exact_mse", exact)?;
        Ok(out)
    }

    /// Willie's QRE from the truncated Fock-space oracle.
    #[pyo3(signature = (ns, theta = 0.0))]
    fn oracle_willie_qre(&self, py: Python<'_>, ns: f64, theta: f64) -> PyResult<f64> {
        py.detach(|| {
            let h0 = oracle_willie_state(&self.inner, 0.0, theta, None)?;
            let h1 = oracle_willie_state(&self.inner, ns, theta, None)?;
            oracle_qre(&h0, &h1)
        })
        .map_err(err)
    }

    fn __repr__(&self) -> String {
        let s = &self.inner;
        format!(
            "Scenario(eta1={}, eta2={}, nb1={}, nb2={})",
            s.eta1, s.eta2, s.nb1, s.nb2
        )
    }
}

fn settings(epsilon: f64, bandwidth: f64, time: f64) -> BoundSettings {
    BoundSettings {
        epsilon,
        bandwidth_hz: bandwidth,
        time_s: time,
    }
}

/// `c_ASE` and `B` at one wavelength for the default link geometry.
#[pyfunction]
#[pyo3(signature = (lambda_m, range_m, epsilon = 1e-3, bandwidth = 3e12, time = 1.0))]
fn link_point<'py>(
    py: Python<'py>,
    lambda_m: f64,
    range_m: f64,
    epsilon: f64,
    bandwidth: f64,
    time: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let p = link::c_ase_at(lambda_m, &LinkGeometry::new(range_m)).map_err(err)?;
    let b = settings(epsilon, bandwidth, time)
        .bound(p.c_ase)
        .map_err(err)?;
    let out = to_py(py, &p)?;
    out.set_item("B", b)?;
    Ok(out)
}

#[pyfunction]
#[pyo3(signature = (range_m, lambda_min = link::DEFAULT_BRACKET.0, lambda_max = link::DEFAULT_BRACKET.1,
                    epsilon = 1e-3, bandwidth = 3e12, time = 1.0))]
fn optimize_wavelength<'py>(
    py: Python<'py>,
    range_m: f64,
    lambda_min: f64,
    lambda_max: f64,
    epsilon: f64,
    bandwidth: f64,
    time: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let g = LinkGeometry::new(range_m);
    let o = link::optimize_wavelength(
        &g,
        lambda_min,
        lambda_max,
        &settings(epsilon, bandwidth, time),
    )
    .map_err(err)?;
    to_py(py, &o)
}

#[pyfunction]
#[pyo3(signature = (range_m, f_min = link::PLOT_BAND_HZ.0, f_max = link::PLOT_BAND_HZ.1,
                    points = link::PLOT_POINTS, epsilon = 1e-3, bandwidth = 3e12, time = 1.0))]
#[allow(clippy::too_many_arguments)]
fn sweep<'py>(
    py: Python<'py>,
    range_m: f64,
    f_min: f64,
    f_max: f64,
    points: usize,
    epsilon: f64,
    bandwidth: f64,
    time: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let g = LinkGeometry::new(range_m);
    let bs = settings(epsilon, bandwidth, time);
    let rows = py
        .detach(|| link::sweep_frequency(f_min, f_max, points, &g, &bs))
        .map_err(err)?;
    to_py(py, &rows)
}

#[pymodule]
fn covsense_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("CovsenseError", m.py().get_type::<CovsenseError>())?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyScenario>()?;
    m.add_function(wrap_pyfunction!(link_point, m)?)?;
    m.add_function(wrap_pyfunction!(optimize_wavelength, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    Ok(())
}
