//! Python bindings for the weakmeter crate: the mixed Gaussian probe, the
//! coupling window, the spin geometry with its closed forms, and the generic
//! exact engine for arbitrary small-dimension systems.

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use weakmeter::measurement_engine::{
    conditional_distribution, default_grid, weak_value, MeasurementSetup, PointerGrid,
};
use weakmeter::probe_model::{coupling_moments, derived_scales, CouplingWindow, GaussianProbe};
use weakmeter::quantum_core::{ObservableOp, SystemState};
use weakmeter::spin_analytic::{
    self, engine_setup, exact_average_spin, normalizer, spin_weak_value, Branch, SpinGeometry,
    SpinScenario,
};

fn err(e: weakmeter::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Mixed Gaussian probe in the momentum representation.
#[pyclass(frozen, skip_from_py_object)]
#[derive(Clone)]
struct Probe {
    inner: GaussianProbe,
}

#[pymethods]
impl Probe {
    /// `p_phi=None` means no linear phase (the pure-limit sentinel).
    #[new]
    #[pyo3(signature = (delta_p_spread, delta_p_coherence, p_phi=None, mass=1.0, hbar=1.0))]
    fn new(
        delta_p_spread: f64,
        delta_p_coherence: f64,
        p_phi: Option<f64>,
        mass: f64,
        hbar: f64,
    ) -> PyResult<Self> {
        GaussianProbe::new(
            delta_p_spread,
            delta_p_coherence,
            p_phi.unwrap_or(f64::INFINITY),
            mass,
            hbar,
        )
        .map(|inner| Self { inner })
        .map_err(err)
    }

    /// Scales derived from the probe and a coupling window:
    /// {"p_h", "kappa_sq", "nu", "q0"}.
    fn scales<'py>(&self, py: Python<'py>, window: &Window) -> PyResult<Bound<'py, PyDict>> {
        let moments = coupling_moments(&window.inner).map_err(err)?;
        let scales = derived_scales(&self.inner, &moments);
        let dict = PyDict::new(py);
        dict.set_item("p_h", scales.p_h)?;
        dict.set_item("kappa_sq", scales.kappa_sq)?;
        dict.set_item("nu", scales.nu)?;
        dict.set_item("q0", scales.q0)?;
        Ok(dict)
    }

    fn __repr__(&self) -> String {
        format!(
            "Probe(delta_p_spread={}, delta_p_coherence={}, p_phi={}, mass={}, hbar={})",
            self.inner.delta_p_spread,
            self.inner.delta_p_coherence,
            self.inner.p_phi,
            self.inner.mass,
            self.inner.hbar
        )
    }
}

/// Coupling window g(t) between the system and the probe.
#[pyclass(frozen, skip_from_py_object)]
#[derive(Clone)]
struct Window {
    inner: CouplingWindow,
}

#[pymethods]
impl Window {
    #[staticmethod]
    #[pyo3(signature = (duration, prep_lead=0.0))]
    fn rectangular(duration: f64, prep_lead: f64) -> PyResult<Self> {
        let inner = CouplingWindow::Rectangular {
            duration,
            prep_lead,
        };
        inner.validate().map_err(err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (prep_lead=0.0))]
    fn instantaneous(prep_lead: f64) -> PyResult<Self> {
        let inner = CouplingWindow::Instantaneous { prep_lead };
        inner.validate().map_err(err)?;
        Ok(Self { inner })
    }

    fn __repr__(&self) -> String {
        match self.inner {
            CouplingWindow::Instantaneous { prep_lead } => {
                format!("Window.instantaneous(prep_lead={prep_lead})")
            }
            CouplingWindow::Rectangular {
                duration,
                prep_lead,
            } => format!("Window.rectangular({duration}, prep_lead={prep_lead})"),
        }
    }
}

/// Spin-1/2 measurement geometry: preselection along Z, measured axis at
/// `theta` from Z in the XZ plane, postselection axis
/// (sin(gamma) cos(phi), sin(gamma) sin(phi), cos(gamma)).
#[pyclass(frozen, skip_from_py_object)]
#[derive(Clone)]
struct Geometry {
    inner: SpinGeometry,
}

#[pymethods]
impl Geometry {
    #[new]
    fn new(theta: f64, gamma: f64, phi: f64) -> PyResult<Self> {
        SpinGeometry::new(theta, gamma, phi)
            .map(|inner| Self { inner })
            .map_err(err)
    }

    /// Complex weak value A_w = cos(theta) + sin(theta) e^{-i phi} tan(gamma/2).
    fn weak_value(&self) -> PyResult<Complex64> {
        spin_weak_value(&self.inner).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!(
            "Geometry(theta={}, gamma={}, phi={})",
            self.inner.theta, self.inner.gamma, self.inner.phi
        )
    }
}

fn spin_scenario(
    geometry: &Geometry,
    probe: &Probe,
    window: &Window,
    lam: f64,
) -> PyResult<SpinScenario> {
    let moments = coupling_moments(&window.inner).map_err(err)?;
    SpinScenario::new(geometry.inner, probe.inner, moments, lam).map_err(err)
}

fn spin_setup(
    geometry: &Geometry,
    probe: &Probe,
    window: &Window,
    lam: f64,
) -> PyResult<MeasurementSetup> {
    engine_setup(&geometry.inner, &probe.inner, &window.inner, lam).map_err(err)
}

fn grid_for(
    setup: &MeasurementSetup,
    p_min: Option<f64>,
    p_max: Option<f64>,
    n_points: Option<usize>,
) -> PyResult<PointerGrid> {
    match (p_min, p_max) {
        (None, None) => Ok(default_grid(setup)),
        (Some(lo), Some(hi)) => PointerGrid::new(lo, hi, n_points.unwrap_or(4001)).map_err(err),
        _ => Err(PyValueError::new_err(
            "p_min and p_max must be given together",
        )),
    }
}

/// Exact conditional average, closed form, any coupling strength.
#[pyfunction]
fn exact_average(geometry: &Geometry, probe: &Probe, window: &Window, lam: f64) -> PyResult<f64> {
    exact_average_spin(&spin_scenario(geometry, probe, window, lam)?).map_err(err)
}

/// Weak-limit average Re A_w - kappa^2 Im A_w.
#[pyfunction]
fn weak_average(geometry: &Geometry, probe: &Probe, window: &Window) -> PyResult<f64> {
    let a_w = spin_weak_value(&geometry.inner).map_err(err)?;
    let moments = coupling_moments(&window.inner).map_err(err)?;
    let kappa_sq = derived_scales(&probe.inner, &moments).kappa_sq;
    Ok(a_w.re - kappa_sq * a_w.im)
}

/// Postselection probability of the spin scenario.
#[pyfunction]
fn postselection_probability(
    geometry: &Geometry,
    probe: &Probe,
    window: &Window,
    lam: f64,
) -> PyResult<f64> {
    Ok(normalizer(&spin_scenario(geometry, probe, window, lam)?) / 2.0)
}

/// Conditional pointer density from the exact engine:
/// returns (p values, density values, postselection probability).
#[pyfunction]
#[pyo3(signature = (geometry, probe, window, lam, p_min=None, p_max=None, n_points=None))]
fn conditional_density(
    geometry: &Geometry,
    probe: &Probe,
    window: &Window,
    lam: f64,
    p_min: Option<f64>,
    p_max: Option<f64>,
    n_points: Option<usize>,
) -> PyResult<(Vec<f64>, Vec<f64>, f64)> {
    let setup = spin_setup(geometry, probe, window, lam)?;
    let grid = grid_for(&setup, p_min, p_max, n_points)?;
    let dist = conditional_distribution(&setup, &grid).map_err(err)?;
    Ok((
        grid.points().collect(),
        dist.density,
        dist.postselection_probability,
    ))
}

/// Engine estimate of <A> = <p>/lambda under the conditional distribution.
#[pyfunction]
#[pyo3(signature = (geometry, probe, window, lam, p_min=None, p_max=None, n_points=None))]
fn inferred_average(
    geometry: &Geometry,
    probe: &Probe,
    window: &Window,
    lam: f64,
    p_min: Option<f64>,
    p_max: Option<f64>,
    n_points: Option<usize>,
) -> PyResult<f64> {
    let setup = spin_setup(geometry, probe, window, lam)?;
    let grid = grid_for(&setup, p_min, p_max, n_points)?;
    weakmeter::measurement_engine::inferred_average(&setup, &grid).map_err(err)
}

/// Engine estimate of the variance of p/lambda under the conditional
/// distribution.
#[pyfunction]
#[pyo3(signature = (geometry, probe, window, lam, p_min=None, p_max=None, n_points=None))]
fn inferred_variance(
    geometry: &Geometry,
    probe: &Probe,
    window: &Window,
    lam: f64,
    p_min: Option<f64>,
    p_max: Option<f64>,
    n_points: Option<usize>,
) -> PyResult<f64> {
    let setup = spin_setup(geometry, probe, window, lam)?;
    let grid = grid_for(&setup, p_min, p_max, n_points)?;
    weakmeter::measurement_engine::inferred_variance(&setup, &grid).map_err(err)
}

/// Extremal values of the average over gamma, one entry per branch:
/// {"upper": {...}, "lower": {...}} with gamma_star, value, method.
#[pyfunction]
fn average_extrema<'py>(
    py: Python<'py>,
    geometry: &Geometry,
    probe: &Probe,
    window: &Window,
    lam: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let sc = spin_scenario(geometry, probe, window, lam)?;
    let out = PyDict::new(py);
    for (branch, name) in [(Branch::Upper, "upper"), (Branch::Lower, "lower")] {
        let ext = spin_analytic::extremum(&sc, branch).map_err(err)?;
        let entry = PyDict::new(py);
        entry.set_item("gamma_star", ext.gamma_star)?;
        entry.set_item("value", ext.value)?;
        entry.set_item("method", ext.method.label())?;
        out.set_item(name, entry)?;
    }
    Ok(out)
}

/// Closed-form extrema of the variance over (gamma, phi), valid when the
/// linear-phase scale dominates nu.
#[pyfunction]
fn spread_extrema<'py>(
    py: Python<'py>,
    geometry: &Geometry,
    probe: &Probe,
    window: &Window,
    lam: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let sc = spin_scenario(geometry, probe, window, lam)?;
    let spread = spin_analytic::spread_extrema(&sc).map_err(err)?;
    let out = PyDict::new(py);
    out.set_item("min", spread.min)?;
    out.set_item("max", spread.max)?;
    out.set_item("min_gamma", spread.min_gamma)?;
    out.set_item("min_phi", spread.min_phi)?;
    out.set_item("max_gamma", spread.max_gamma)?;
    out.set_item("max_phi", spread.max_phi)?;
    Ok(out)
}

fn parse_state(amps: Vec<Complex64>) -> PyResult<SystemState> {
    SystemState::new(amps).map_err(err)
}

fn parse_observable(matrix: Vec<Vec<Complex64>>) -> PyResult<ObservableOp> {
    let dim = matrix.len();
    let flat: Vec<Complex64> = matrix.into_iter().flatten().collect();
    if flat.len() != dim * dim {
        return Err(PyValueError::new_err("observable must be a square matrix"));
    }
    ObservableOp::new(dim, flat).map_err(err)
}

/// Weak value for an arbitrary pre/post pair and Hermitian observable,
/// given as nested lists of complex numbers. Returns (A_w, (A^2)_w).
#[pyfunction]
fn generic_weak_value(
    pre: Vec<Complex64>,
    post: Vec<Complex64>,
    observable: Vec<Vec<Complex64>>,
) -> PyResult<(Complex64, Complex64)> {
    let report = weak_value(
        &parse_state(pre)?,
        &parse_state(post)?,
        &parse_observable(observable)?,
    )
    .map_err(err)?;
    Ok((report.a_w, report.a2_w))
}

/// Engine average for an arbitrary small-dimension system.
#[pyfunction]
fn generic_inferred_average(
    pre: Vec<Complex64>,
    post: Vec<Complex64>,
    observable: Vec<Vec<Complex64>>,
    probe: &Probe,
    window: &Window,
    lam: f64,
) -> PyResult<f64> {
    let setup = MeasurementSetup::new(
        parse_state(pre)?,
        parse_state(post)?,
        parse_observable(observable)?,
        probe.inner,
        window.inner,
        lam,
    )
    .map_err(err)?;
    let grid = default_grid(&setup);
    weakmeter::measurement_engine::inferred_average(&setup, &grid).map_err(err)
}

#[pymodule]
fn weakmeter_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Probe>()?;
    m.add_class::<Window>()?;
    m.add_class::<Geometry>()?;
    m.add_function(wrap_pyfunction!(exact_average, m)?)?;
    m.add_function(wrap_pyfunction!(weak_average, m)?)?;
    m.add_function(wrap_pyfunction!(postselection_probability, m)?)?;
    m.add_function(wrap_pyfunction!(conditional_density, m)?)?;
    m.add_function(wrap_pyfunction!(inferred_average, m)?)?;
    m.add_function(wrap_pyfunction!(inferred_variance, m)?)?;
    m.add_function(wrap_pyfunction!(average_extrema, m)?)?;
    m.add_function(wrap_pyfunction!(spread_extrema, m)?)?;
    m.add_function(wrap_pyfunction!(generic_weak_value, m)?)?;
    m.add_function(wrap_pyfunction!(generic_inferred_average, m)?)?;
    Ok(())
}
