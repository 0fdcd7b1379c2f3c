use std::sync::Arc;

use ddlab::energy;
use ddlab::error::Error;
use ddlab::forms::{self, DualMethod, FormFile};
use ddlab::linalg::CMat;
use ddlab::poly::{AnyPoly, BlockGrading};
use ddlab::projgeom::{self, FormRole};
use ddlab::quadrature::{self, PlaneCurve, SpaceSpec};
use ddlab::verify::{run_check, verify_all, CheckKind, Scenario};
use num_complex::Complex64;
use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Numerical(_) | Error::Calibration(_) => PyRuntimeError::new_err(e.to_string()),
        Error::Io(_) => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

trait IntoPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T, E: Into<Error>> IntoPy<T> for Result<T, E> {
    fn py(self) -> PyResult<T> {
        self.map_err(|e| py_err(e.into()))
    }
}

/// A polynomial form with exact (Gaussian rational) or float coefficients.
#[pyclass(name = "Poly", module = "ddlab", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyPoly {
    inner: AnyPoly,
}

#[pymethods]
impl PyPoly {
    /// Parses form-file text, or a bare polynomial in x0, x1, x2.
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        Ok(PyPoly { inner: FormFile::parse(text).py()?.poly })
    }

    /// Parses polynomial text over an explicit grading such as "H1:3,H2:3".
    #[staticmethod]
    #[pyo3(signature = (grading, text, exact = true))]
    fn with_grading(grading: &str, text: &str, exact: bool) -> PyResult<Self> {
        let g = BlockGrading::from_header(grading).py()?;
        let kind = if exact { ddlab::coeff::CoeffKind::Exact } else { ddlab::coeff::CoeffKind::Float };
        Ok(PyPoly { inner: AnyPoly::parse(g, kind, text).py()? })
    }

    fn to_text(&self) -> String {
        self.inner.to_text()
    }

    /// Form-file rendering with a header.
    #[pyo3(signature = (kind = "form"))]
    fn to_form_file(&self, kind: &str) -> String {
        FormFile::new(kind, self.inner.clone(), &[]).render()
    }

    #[getter]
    fn is_exact(&self) -> bool {
        matches!(self.inner, AnyPoly::Exact(_))
    }

    #[getter]
    fn grading(&self) -> String {
        match &self.inner {
            AnyPoly::Exact(p) => p.grading().to_header(),
            AnyPoly::Float(p) => p.grading().to_header(),
        }
    }

    fn multidegree(&self) -> PyResult<Vec<u32>> {
        match &self.inner {
            AnyPoly::Exact(p) => p.multidegree().py(),
            AnyPoly::Float(p) => p.multidegree().py(),
        }
    }

    /// Evaluates at one complex vector per block.
    fn eval(&self, points: Vec<Vec<Complex64>>) -> PyResult<Complex64> {
        self.inner.to_float().eval_c64(&points).py()
    }

    fn __repr__(&self) -> String {
        format!("Poly({:?}, {:?})", self.grading(), self.inner.to_text())
    }
}

fn matrix(rows: &[Vec<Complex64>]) -> PyResult<CMat> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err("expected a non-empty square matrix"));
    }
    Ok(CMat::from_fn(n, n, |i, j| rows[i][j]))
}

/// An element of SL(N+1, C).
#[pyclass(name = "GroupElement", module = "ddlab", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyGroupElement {
    inner: projgeom::GroupElement,
}

#[pymethods]
impl PyGroupElement {
    /// Rescales the matrix to determinant one.
    #[new]
    fn new(rows: Vec<Vec<Complex64>>) -> PyResult<Self> {
        Ok(PyGroupElement { inner: projgeom::GroupElement::new(matrix(&rows)?).py()? })
    }

    #[staticmethod]
    fn identity(n: usize) -> Self {
        PyGroupElement { inner: projgeom::GroupElement::identity(n) }
    }

    #[staticmethod]
    fn random(n: usize, radius: f64, seed: u64) -> Self {
        let mut rng = quadrature::chunk_rng(seed, 0);
        PyGroupElement { inner: projgeom::GroupElement::random(n, radius, &mut rng) }
    }

    #[staticmethod]
    fn random_unitary(n: usize, seed: u64) -> Self {
        let mut rng = quadrature::chunk_rng(seed, 0);
        PyGroupElement { inner: projgeom::GroupElement::random_unitary(n, &mut rng) }
    }

    /// `exp(tA)` for a trace-free generator `A`.
    #[staticmethod]
    fn exp(generator: Vec<Vec<Complex64>>, t: f64) -> PyResult<Self> {
        Ok(PyGroupElement { inner: projgeom::one_param_subgroup(&matrix(&generator)?, t).py()? })
    }

    fn rows(&self) -> Vec<Vec<Complex64>> {
        self.inner.rows()
    }

    fn inverse(&self) -> Self {
        PyGroupElement { inner: self.inner.inverse() }
    }

    fn compose(&self, other: &PyGroupElement) -> Self {
        PyGroupElement { inner: self.inner.compose(&other.inner) }
    }

    fn is_unitary(&self) -> bool {
        self.inner.is_unitary()
    }

    /// `log(‖σx‖²/‖x‖²)`.
    fn potential(&self, x: Vec<Complex64>) -> PyResult<f64> {
        if x.len() != self.inner.size() {
            return Err(PyValueError::new_err("point has the wrong dimension"));
        }
        Ok(self.inner.bergman_potential().value(&x))
    }

    /// The transformed form: `f∘σ⁻¹` for points, `f(σᵀH)` for hyperplanes.
    #[pyo3(signature = (form, role = "points"))]
    fn act(&self, form: &PyPoly, role: &str) -> PyResult<PyPoly> {
        let out = match &form.inner {
            AnyPoly::Exact(p) => self.inner.act_form(p, parse_role(role)?),
            AnyPoly::Float(p) => self.inner.act_form(p, parse_role(role)?),
        };
        Ok(PyPoly { inner: AnyPoly::Float(out.py()?) })
    }
}

fn parse_role(role: &str) -> PyResult<FormRole> {
    match role {
        "points" => Ok(FormRole::Points),
        "hyperplanes" => Ok(FormRole::Hyperplanes),
        o => Err(PyValueError::new_err(format!("role must be 'points' or 'hyperplanes', got {o:?}"))),
    }
}

/// A Monte-Carlo estimate.
#[pyclass(name = "Estimate", module = "ddlab", frozen, get_all, skip_from_py_object)]
#[derive(Clone)]
struct PyEstimate {
    value: f64,
    stderr: f64,
    samples: u64,
    seed: u64,
    method: String,
}

impl From<quadrature::Estimate> for PyEstimate {
    fn from(e: quadrature::Estimate) -> Self {
        PyEstimate { value: e.value, stderr: e.stderr, samples: e.samples, seed: e.seed, method: e.method }
    }
}

#[pymethods]
impl PyEstimate {
    fn __repr__(&self) -> String {
        format!("Estimate({} ± {}, samples={}, seed={})", self.value, self.stderr, self.samples, self.seed)
    }
}

fn curve_of(p: &PyPoly) -> PyResult<Arc<PlaneCurve>> {
    let c = match &p.inner {
        AnyPoly::Exact(f) => PlaneCurve::smooth(f),
        AnyPoly::Float(f) => PlaneCurve::smooth(f),
    };
    Ok(Arc::new(c.py()?))
}

#[pyfunction]
fn chow_form(curve: &PyPoly) -> PyResult<PyPoly> {
    let inner = match &curve.inner {
        AnyPoly::Exact(p) => AnyPoly::Exact(forms::chow_form_hypersurface(p, 2).py()?.poly),
        AnyPoly::Float(p) => AnyPoly::Float(forms::chow_form_hypersurface(p, 2).py()?.poly),
    };
    Ok(PyPoly { inner })
}

#[pyfunction]
#[pyo3(signature = (curve, method = "eliminate", seed = 0))]
fn dual_curve(curve: &PyPoly, method: &str, seed: u64) -> PyResult<PyPoly> {
    let m: DualMethod = method.parse().py()?;
    curve_of(curve)?;
    Ok(PyPoly { inner: forms::discriminant_form(&curve.inner, m, seed).py()?.poly })
}

#[pyfunction]
fn mu_exponent(degree: u32) -> PyResult<(i64, i64)> {
    let mu = energy::mu_exponent(&forms::degree_data_for(degree).py()?);
    Ok((*mu.numer(), *mu.denom()))
}

#[pyfunction]
#[pyo3(signature = (form, samples = 100_000, seed = 0))]
fn deligne_norm_log(py: Python<'_>, form: &PyPoly, samples: u64, seed: u64) -> PyResult<PyEstimate> {
    let f = form.inner.to_float();
    py.detach(|| energy::deligne_norm_log(&f, samples, seed)).py().map(Into::into)
}

#[pyfunction]
#[pyo3(signature = (form, sigma, role = "hyperplanes", samples = 100_000, seed = 0))]
fn delta_log_norm(py: Python<'_>, form: &PyPoly, sigma: &PyGroupElement, role: &str, samples: u64, seed: u64) -> PyResult<PyEstimate> {
    let (f, g, r) = (form.inner.to_float(), sigma.inner.clone(), parse_role(role)?);
    py.detach(|| energy::delta_log_norm(&f, &g, r, samples, seed)).py().map(Into::into)
}

/// Aubin–Yau energy of the Bergman potential of `sigma`, on a curve or on
/// projective space of dimension `projective`.
#[pyfunction]
#[pyo3(signature = (sigma, curve = None, projective = None, samples = 100_000, seed = 0))]
fn aubin_yau(py: Python<'_>, sigma: &PyGroupElement, curve: Option<&PyPoly>, projective: Option<usize>, samples: u64, seed: u64) -> PyResult<PyEstimate> {
    let space = match (curve, projective) {
        (Some(c), None) => SpaceSpec::PlaneCurve(curve_of(c)?),
        (None, Some(n)) => SpaceSpec::Projective(n),
        _ => return Err(PyValueError::new_err("give exactly one of curve and projective")),
    };
    let phi = sigma.inner.bergman_potential();
    py.detach(|| energy::aubin_yau(&space, &phi, samples, seed)).py().map(Into::into)
}

/// Mabuchi K-energy of the Bergman potential of `sigma` on a plane curve,
/// as `(multilinear, entropy)` estimates from the same random lines.
#[pyfunction]
#[pyo3(signature = (curve, sigma, samples = 100_000, seed = 0))]
fn k_energy(py: Python<'_>, curve: &PyPoly, sigma: &PyGroupElement, samples: u64, seed: u64) -> PyResult<(PyEstimate, PyEstimate)> {
    let c = curve_of(curve)?;
    let mu = energy::mu_exponent(&forms::degree_data_for(c.degree()).py()?);
    let g = sigma.inner.clone();
    let k = py.detach(|| energy::k_energy(&c, &g, mu, samples, seed)).py()?;
    Ok((k.multilinear.into(), k.entropy.into()))
}

#[pyfunction]
#[pyo3(signature = (curve, samples = 100_000, seed = 0))]
fn mean_scalar_curvature(py: Python<'_>, curve: &PyPoly, samples: u64, seed: u64) -> PyResult<PyEstimate> {
    let c = curve_of(curve)?;
    py.detach(|| energy::mean_scalar_curvature(&c, samples, seed)).py().map(Into::into)
}

/// Runs one check ("zero", "cor1", "cor2", "kderiv" or "all") of a JSON
/// scenario and returns the report as JSON text.
#[pyfunction]
#[pyo3(signature = (scenario, check = "all", seed = 0))]
fn verify(py: Python<'_>, scenario: &str, check: &str, seed: u64) -> PyResult<String> {
    let s = Scenario::parse(scenario).py()?;
    let kind = match check {
        "all" => None,
        k => Some(serde_json::from_value::<CheckKind>(serde_json::Value::String(k.into())).map_err(|e| PyValueError::new_err(e.to_string()))?),
    };
    let report = py.detach(|| match kind {
        None => verify_all(&s, seed),
        Some(k) => run_check(k, &s, seed),
    });
    Ok(report.py()?.to_json())
}

/// The CLI's fast invariant suite: `(summary, all_passed)`.
#[pyfunction]
fn selftest(py: Python<'_>) -> (String, bool) {
    py.detach(ddlab::cli::selftest)
}

#[pymodule]
#[pyo3(name = "ddlab")]
fn ddlab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPoly>()?;
    m.add_class::<PyGroupElement>()?;
    m.add_class::<PyEstimate>()?;
    m.add_function(wrap_pyfunction!(chow_form, m)?)?;
    m.add_function(wrap_pyfunction!(dual_curve, m)?)?;
    m.add_function(wrap_pyfunction!(mu_exponent, m)?)?;
    m.add_function(wrap_pyfunction!(deligne_norm_log, m)?)?;
    m.add_function(wrap_pyfunction!(delta_log_norm, m)?)?;
    m.add_function(wrap_pyfunction!(aubin_yau, m)?)?;
    m.add_function(wrap_pyfunction!(k_energy, m)?)?;
    m.add_function(wrap_pyfunction!(mean_scalar_curvature, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(selftest, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
