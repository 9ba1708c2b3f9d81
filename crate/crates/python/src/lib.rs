//! Python bindings: `import ultradiff`.

use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;

use ultradiff::asymptotics::{self, AsymptoticModel, LimitParams};
use ultradiff::hierarchy::{self, Branching, FiniteTree, Kernel, UltrametricHierarchy};
use ultradiff::scenario::{Extend, Scenario};
use ultradiff::sink::{self, SinkSpectrum};
use ultradiff::{diffusion, oracle, spectrum};

create_exception!(ultradiff, UltradiffError, PyException);

fn err(e: ultradiff::Error) -> PyErr {
    UltradiffError::new_err(e.to_string())
}

fn kernel(alpha: f64) -> PyResult<Kernel> {
    Kernel::new(alpha).map_err(err)
}

fn json_to_py<'py>(py: Python<'py>, value: &impl serde::Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| UltradiffError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

/// Distances `d_i` and ball sizes `N_i` around a centre.
#[pyclass(name = "Hierarchy", module = "ultradiff", frozen)]
pub struct PyHierarchy {
    inner: UltrametricHierarchy,
}

#[pymethods]
impl PyHierarchy {
    #[staticmethod]
    fn self_similar(p: u32, xi: f64) -> PyResult<Self> {
        Ok(Self {
            inner: UltrametricHierarchy::self_similar(p, xi).map_err(err)?,
        })
    }

    /// `delta` and `epsilon` list the perturbations from index 1; `extend` is "hold" or "cycle".
    #[staticmethod]
    #[pyo3(signature = (p, xi, delta, epsilon, extend = "hold"))]
    fn perturbed(p: u32, xi: f64, delta: Vec<f64>, epsilon: Vec<f64>, extend: &str) -> PyResult<Self> {
        let extend = match extend {
            "hold" => Extend::Hold,
            "cycle" => Extend::Cycle,
            other => return Err(UltradiffError::new_err(format!("extend must be hold or cycle, got {other}"))),
        };
        let s = Scenario {
            kind: ultradiff::scenario::ScenarioKind::Perturbed,
            p: Some(p),
            xi: Some(xi),
            delta,
            epsilon,
            extend,
            ..Scenario::default()
        };
        Ok(Self {
            inner: s.hierarchy().map_err(err)?,
        })
    }

    /// `radii = [d_1..d_L]`, `balls = [N_0..N_L]`.
    #[staticmethod]
    fn tabulated(radii: Vec<f64>, balls: Vec<f64>) -> PyResult<Self> {
        Ok(Self {
            inner: UltrametricHierarchy::tabulated(&radii, &balls).map_err(err)?,
        })
    }

    /// Hierarchy of a JSON scenario (`alpha` is ignored here).
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let s = Scenario::from_json(text).map_err(err)?;
        Ok(Self {
            inner: s.hierarchy().map_err(err)?,
        })
    }

    fn truncated(&self, levels: usize) -> PyResult<Self> {
        Ok(Self {
            inner: self.inner.truncated(levels).map_err(err)?,
        })
    }

    #[getter]
    fn max_level(&self) -> usize {
        self.inner.max_level()
    }

    #[getter]
    fn is_generated(&self) -> bool {
        self.inner.is_generated()
    }

    fn radius(&self, i: usize) -> PyResult<f64> {
        self.inner.radius(i).map_err(err)
    }

    fn ball_size(&self, i: usize) -> PyResult<f64> {
        self.inner.ball_size(i).map_err(err)
    }

    fn sphere_size(&self, i: usize) -> PyResult<f64> {
        self.inner.sphere_size(i).map_err(err)
    }

    /// Condition report as a dict.
    #[pyo3(signature = (alpha, probe_depth = 32))]
    fn validate<'py>(&self, py: Python<'py>, alpha: f64, probe_depth: usize) -> PyResult<Bound<'py, PyAny>> {
        let r = hierarchy::validate(&self.inner, &kernel(alpha)?, probe_depth).map_err(err)?;
        json_to_py(py, &r)
    }

    fn __repr__(&self) -> String {
        format!(
            "Hierarchy(levels={}, generated={})",
            self.inner.max_level(),
            self.inner.is_generated()
        )
    }
}

/// Balanced rooted tree; leaf 0 is the centre.
#[pyclass(name = "FiniteTree", module = "ultradiff", frozen)]
pub struct PyFiniteTree {
    inner: FiniteTree,
}

#[pymethods]
impl PyFiniteTree {
    #[staticmethod]
    fn uniform(p: u32, depth: usize, xi: f64) -> PyResult<Self> {
        Ok(Self {
            inner: FiniteTree::uniform(p, depth, xi).map_err(err)?,
        })
    }

    /// `branching` in the JSON form of scenario files (flat counts or nested lists).
    #[staticmethod]
    fn from_json(branching: &str, level_distance: Vec<f64>) -> PyResult<Self> {
        let b: Branching = serde_json::from_str(branching).map_err(|e| UltradiffError::new_err(e.to_string()))?;
        Ok(Self {
            inner: FiniteTree::new(&b, &level_distance).map_err(err)?,
        })
    }

    #[getter]
    fn levels(&self) -> usize {
        self.inner.levels()
    }

    #[getter]
    fn leaf_count(&self) -> usize {
        self.inner.leaf_count()
    }

    fn dist(&self, x: usize, y: usize) -> f64 {
        self.inner.dist(x, y)
    }

    fn hierarchy(&self) -> PyResult<PyHierarchy> {
        Ok(PyHierarchy {
            inner: self.inner.hierarchy().map_err(err)?,
        })
    }

    /// Per-point values on `S_0..S_L` from the dense matrix exponential.
    #[pyo3(signature = (alpha, t, sink_rate = 0.0))]
    fn oracle_profile(&self, py: Python<'_>, alpha: f64, t: f64, sink_rate: f64) -> PyResult<Vec<f64>> {
        let k = kernel(alpha)?;
        py.detach(|| {
            let h = self.inner.hierarchy()?;
            let g = oracle::build_rate_matrix(&self.inner, k, sink_rate)?;
            let m = oracle::project(&self.inner, &oracle::evolve(&g, &oracle::point_source(&self.inner), t)?);
            m.iter()
                .enumerate()
                .map(|(j, v)| Ok(v / h.sphere_size(j)?))
                .collect::<ultradiff::Result<Vec<f64>>>()
        })
        .map_err(err)
    }

    /// Gillespie simulation of walkers started at the centre.
    #[pyo3(signature = (alpha, walkers, times, seed, sink_rate = 0.0))]
    fn gillespie<'py>(
        &self,
        py: Python<'py>,
        alpha: f64,
        walkers: usize,
        times: Vec<f64>,
        seed: u64,
        sink_rate: f64,
    ) -> PyResult<Bound<'py, PyAny>> {
        let k = kernel(alpha)?;
        let r = py
            .detach(|| oracle::gillespie(&self.inner, k, sink_rate, walkers, &times, seed))
            .map_err(err)?;
        json_to_py(py, &r)
    }
}

/// Eigenvalues `λ_i` and point-source weights `a_i`.
#[pyclass(name = "Spectrum", module = "ultradiff", frozen)]
pub struct PySpectrum {
    inner: spectrum::Spectrum,
}

#[pymethods]
impl PySpectrum {
    #[new]
    #[pyo3(signature = (hierarchy, alpha, tol = spectrum::DEFAULT_TOL))]
    fn new(hierarchy: &PyHierarchy, alpha: f64, tol: f64) -> PyResult<Self> {
        Ok(Self {
            inner: spectrum::Spectrum::new(&hierarchy.inner, kernel(alpha)?, tol).map_err(err)?,
        })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn lambdas(&self) -> Vec<f64> {
        self.inner.lambda().to_vec()
    }

    #[getter]
    fn weights(&self) -> Vec<f64> {
        self.inner.weights().to_vec()
    }

    #[getter]
    fn is_finite_space(&self) -> bool {
        self.inner.is_finite_space()
    }

    /// `(λ_i, truncation bound)`.
    fn eigenvalue(&self, i: usize) -> PyResult<(f64, f64)> {
        let b = self.inner.eigenvalue(i).map_err(err)?;
        Ok((b.value, b.bound))
    }

    fn point_source(&self) -> Vec<f64> {
        self.inner.point_source()
    }

    fn basis_value(&self, i: usize, k: usize) -> PyResult<f64> {
        spectrum::basis_value(self.inner.hierarchy(), i, k).map_err(err)
    }

    fn triple_product(&self, i: usize, j: usize, k: usize) -> PyResult<f64> {
        spectrum::triple_product(self.inner.hierarchy(), i, j, k).map_err(err)
    }

    /// `(f(x_0, t), bound)`.
    #[pyo3(signature = (t, tol = 1e-14))]
    fn center_value(&self, t: f64, tol: f64) -> PyResult<(f64, f64)> {
        let b = diffusion::center_value(&self.inner, t, tol).map_err(err)?;
        Ok((b.value, b.bound))
    }

    /// Point-source profile on `S_0..S_K` as a dict.
    #[pyo3(signature = (t, k_max, tol = 1e-14))]
    fn solve<'py>(&self, py: Python<'py>, t: f64, k_max: usize, tol: f64) -> PyResult<Bound<'py, PyAny>> {
        let p = diffusion::solve_point_source(&self.inner, t, k_max, tol).map_err(err)?;
        json_to_py(py, &p)
    }

    #[pyo3(signature = (k_rate, t, nodes = 32, tol = 1e-14))]
    fn survival_talbot(&self, k_rate: f64, t: f64, nodes: usize, tol: f64) -> PyResult<f64> {
        sink::survival_talbot(&self.inner, k_rate, t, nodes, tol).map_err(err)
    }

    #[pyo3(signature = (k_rate, t, nodes = 32, tol = 1e-14))]
    fn center_talbot(&self, k_rate: f64, t: f64, nodes: usize, tol: f64) -> PyResult<f64> {
        sink::center_talbot(&self.inner, k_rate, t, nodes, tol).map_err(err)
    }

    #[pyo3(signature = (s, tol = 1e-14))]
    fn j_function(&self, s: Complex64, tol: f64) -> PyResult<Complex64> {
        Ok(sink::j_function(&self.inner, s, tol).map_err(err)?.value)
    }
}

/// Poles and residues with a point sink of rate `k` at the centre.
#[pyclass(name = "SinkSpectrum", module = "ultradiff", frozen)]
pub struct PySinkSpectrum {
    inner: SinkSpectrum,
}

#[pymethods]
impl PySinkSpectrum {
    #[new]
    #[pyo3(signature = (spectrum, k_rate, n = None, tol = 1e-14))]
    fn new(py: Python<'_>, spectrum: &PySpectrum, k_rate: f64, n: Option<usize>, tol: f64) -> PyResult<Self> {
        let inner = py
            .detach(|| SinkSpectrum::new(&spectrum.inner, k_rate, n, tol))
            .map_err(err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn k_rate(&self) -> f64 {
        self.inner.k_rate()
    }

    #[getter]
    fn nu(&self) -> Vec<f64> {
        self.inner.nu()
    }

    #[getter]
    fn b(&self) -> Vec<f64> {
        self.inner.b()
    }

    fn poles<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        json_to_py(py, &self.inner.poles())
    }

    fn interlaced(&self) -> bool {
        self.inner.interlaced()
    }

    fn survival_mass(&self) -> f64 {
        self.inner.survival_mass()
    }

    #[pyo3(signature = (t, tol = 1e-12))]
    fn survival(&self, t: f64, tol: f64) -> PyResult<(f64, f64)> {
        let b = self.inner.survival(t, tol).map_err(err)?;
        Ok((b.value, b.bound))
    }

    #[pyo3(signature = (t, tol = 1e-12))]
    fn center_value(&self, t: f64, tol: f64) -> PyResult<(f64, f64)> {
        let b = self.inner.center_value(t, tol).map_err(err)?;
        Ok((b.value, b.bound))
    }

    fn delta_sequence<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        json_to_py(py, &self.inner.delta_sequence())
    }
}

/// `t^{-β} F(t)` with log-periodic `F`.
#[pyclass(name = "AsymptoticModel", module = "ultradiff", frozen)]
pub struct PyAsymptoticModel {
    inner: AsymptoticModel,
}

#[pymethods]
impl PyAsymptoticModel {
    #[getter]
    fn beta(&self) -> f64 {
        self.inner.beta
    }

    #[getter]
    fn log_period(&self) -> f64 {
        self.inner.log_period
    }

    #[getter]
    fn kappa(&self) -> f64 {
        self.inner.kappa()
    }

    fn modulation(&self, t: f64) -> PyResult<f64> {
        self.inner.modulation(t).map_err(err)
    }

    fn evaluate(&self, t: f64) -> PyResult<f64> {
        self.inner.evaluate(t).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!(
            "AsymptoticModel(beta={}, log_period={}, modes={})",
            self.inner.beta, self.inner.log_period, self.inner.modes
        )
    }
}

fn model(m: ultradiff::Result<AsymptoticModel>) -> PyResult<PyAsymptoticModel> {
    Ok(PyAsymptoticModel { inner: m.map_err(err)? })
}

#[pyfunction]
#[pyo3(signature = (a, b, modes = asymptotics::DEFAULT_MODES))]
fn theorem2(a: f64, b: f64, modes: usize) -> PyResult<PyAsymptoticModel> {
    model(asymptotics::theorem2(a, b, modes))
}

#[pyfunction]
#[pyo3(signature = (theta, xi, c, d, alpha, modes = asymptotics::DEFAULT_MODES))]
fn theorem3(theta: f64, xi: f64, c: f64, d: f64, alpha: f64, modes: usize) -> PyResult<PyAsymptoticModel> {
    model(asymptotics::theorem3(&LimitParams { theta, xi, c, d }, alpha, modes))
}

#[pyfunction]
#[pyo3(signature = (theta, xi, c, d, alpha, k_rate, delta = None, modes = asymptotics::DEFAULT_MODES))]
#[allow(clippy::too_many_arguments)]
fn theorem4(
    theta: f64,
    xi: f64,
    c: f64,
    d: f64,
    alpha: f64,
    k_rate: f64,
    delta: Option<f64>,
    modes: usize,
) -> PyResult<PyAsymptoticModel> {
    let delta = match delta {
        Some(v) => v,
        None => asymptotics::limiting_delta(theta, alpha * xi).map_err(err)?,
    };
    model(asymptotics::theorem4(&LimitParams { theta, xi, c, d }, alpha, k_rate, delta, modes))
}

#[pyfunction]
fn limiting_delta(theta: f64, alpha_xi: f64) -> PyResult<f64> {
    asymptotics::limiting_delta(theta, alpha_xi).map_err(err)
}

#[pyfunction]
fn complex_gamma(z: Complex64) -> PyResult<Complex64> {
    asymptotics::complex_gamma(z).map_err(err)
}

/// `(beta, stderr)` of a power-law fit over at least three decades.
#[pyfunction]
#[pyo3(signature = (t, y, log_period = None))]
fn fit_power_exponent(t: Vec<f64>, y: Vec<f64>, log_period: Option<f64>) -> PyResult<(f64, f64)> {
    let f = asymptotics::fit_power_exponent(&t, &y, log_period).map_err(err)?;
    Ok((f.beta, f.stderr))
}

/// Runs the command line with `args` (without the program name); returns the exit code.
#[pyfunction]
fn run_cli(py: Python<'_>, args: Vec<String>) -> i32 {
    py.detach(|| ultradiff::cli::run(std::iter::once("ultradiff".to_owned()).chain(args)))
}

#[pymodule]
#[pyo3(name = "ultradiff")]
fn ultradiff_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("UltradiffError", m.py().get_type::<UltradiffError>())?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyHierarchy>()?;
    m.add_class::<PyFiniteTree>()?;
    m.add_class::<PySpectrum>()?;
    m.add_class::<PySinkSpectrum>()?;
    m.add_class::<PyAsymptoticModel>()?;
    m.add_function(wrap_pyfunction!(theorem2, m)?)?;
    m.add_function(wrap_pyfunction!(theorem3, m)?)?;
    m.add_function(wrap_pyfunction!(theorem4, m)?)?;
    m.add_function(wrap_pyfunction!(limiting_delta, m)?)?;
    m.add_function(wrap_pyfunction!(complex_gamma, m)?)?;
    m.add_function(wrap_pyfunction!(fit_power_exponent, m)?)?;
    m.add_function(wrap_pyfunction!(run_cli, m)?)?;
    Ok(())
}
