//! Python bindings for the `cretan` crate.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use pyo3::basic::CompareOp;
use pyo3::exceptions::{PyRuntimeError, PyTypeError, PyValueError, PyZeroDivisionError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use cretan::cretan::{self as cm, CretanError};
use cretan::designs::{self, DesignError, DesignParams, IncidenceMatrix};
use cretan::numeric::{self, NumericError, SearchConfig, SearchTemplate};
use cretan::qfield::{QfieldError, QuadExt};

fn field_err(e: QfieldError) -> PyErr {
    match e {
        QfieldError::DivisionByZero => PyZeroDivisionError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn design_err(e: DesignError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn cretan_err(e: CretanError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn numeric_err(e: NumericError) -> PyErr {
    match e {
        NumericError::NoFeasiblePoint { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// An exact number `a + b*sqrt(d)` with rational `a`, `b`.
#[pyclass(name = "QuadExt", module = "cretan_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyQuadExt(QuadExt);

fn coerce(obj: &Bound<'_, PyAny>) -> PyResult<QuadExt> {
    if let Ok(q) = obj.extract::<PyRef<'_, PyQuadExt>>() {
        return Ok(q.0.clone());
    }
    if let Ok(n) = obj.extract::<i64>() {
        return Ok(QuadExt::from_int(n));
    }
    if let Ok(s) = obj.extract::<String>() {
        return s.parse().map_err(field_err);
    }
    Err(PyTypeError::new_err("expected QuadExt, int or str"))
}

#[pymethods]
impl PyQuadExt {
    /// `QuadExt(7)`, `QuadExt("-2/3")` or `QuadExt("7 + 3/2*sqrt(3)")`.
    #[new]
    fn new(value: &Bound<'_, PyAny>) -> PyResult<Self> {
        coerce(value).map(PyQuadExt)
    }

    #[staticmethod]
    fn sqrt(n: u64) -> Self {
        PyQuadExt(QuadExt::sqrt(n))
    }

    #[getter]
    fn rational(&self) -> String {
        self.0.rational_part().to_string()
    }

    #[getter]
    fn radical(&self) -> String {
        self.0.radical_part().to_string()
    }

    #[getter]
    fn radicand(&self) -> u64 {
        self.0.radicand()
    }

    fn is_rational(&self) -> bool {
        self.0.is_rational()
    }

    fn norm(&self) -> String {
        self.0.norm().to_string()
    }

    fn conjugate(&self) -> Self {
        PyQuadExt(self.0.conjugate())
    }

    fn inverse(&self) -> PyResult<Self> {
        self.0.inv().map(PyQuadExt).map_err(field_err)
    }

    /// -1, 0 or 1, decided exactly.
    fn sign(&self) -> i8 {
        self.0.signum() as i8
    }

    fn __float__(&self) -> PyResult<f64> {
        self.0.to_f64().map_err(field_err)
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }

    fn __repr__(&self) -> String {
        format!("QuadExt('{}')", self.0)
    }

    fn __hash__(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.0.hash(&mut h);
        h.finish()
    }

    fn __richcmp__(&self, other: &Bound<'_, PyAny>, op: CompareOp) -> PyResult<bool> {
        let other = coerce(other)?;
        let ord = self.0.cmp_exact(&other).map_err(field_err)?;
        Ok(op.matches(ord))
    }

    fn __neg__(&self) -> Self {
        PyQuadExt(-self.0.clone())
    }

    fn __abs__(&self) -> Self {
        PyQuadExt(self.0.abs())
    }

    fn __add__(&self, other: &Bound<'_, PyAny>) -> PyResult<Self> {
        self.0.try_add(&coerce(other)?).map(PyQuadExt).map_err(field_err)
    }

    fn __radd__(&self, other: &Bound<'_, PyAny>) -> PyResult<Self> {
        self.__add__(other)
    }

    fn __sub__(&self, other: &Bound<'_, PyAny>) -> PyResult<Self> {
        self.0.try_sub(&coerce(other)?).map(PyQuadExt).map_err(field_err)
    }

    fn __rsub__(&self, other: &Bound<'_, PyAny>) -> PyResult<Self> {
        coerce(other)?.try_sub(&self.0).map(PyQuadExt).map_err(field_err)
    }

    fn __mul__(&self, other: &Bound<'_, PyAny>) -> PyResult<Self> {
        self.0.try_mul(&coerce(other)?).map(PyQuadExt).map_err(field_err)
    }

    fn __rmul__(&self, other: &Bound<'_, PyAny>) -> PyResult<Self> {
        self.__mul__(other)
    }

    fn __truediv__(&self, other: &Bound<'_, PyAny>) -> PyResult<Self> {
        self.0.try_div(&coerce(other)?).map(PyQuadExt).map_err(field_err)
    }

    fn __rtruediv__(&self, other: &Bound<'_, PyAny>) -> PyResult<Self> {
        coerce(other)?.try_div(&self.0).map(PyQuadExt).map_err(field_err)
    }
}

/// A symmetric design given by its incidence matrix.
#[pyclass(name = "Design", module = "cretan_py", frozen)]
struct PyDesign(IncidenceMatrix);

#[pymethods]
impl PyDesign {
    #[getter]
    fn params(&self) -> (u64, u64, u64) {
        let p = self.0.params();
        (p.v, p.k, p.lambda)
    }

    #[getter]
    fn order(&self) -> usize {
        self.0.order()
    }

    fn rows(&self) -> Vec<Vec<u8>> {
        self.0.rows().into_iter().map(|r| r.into_iter().map(u8::from).collect()).collect()
    }

    fn verify(&self) -> bool {
        designs::verify_sbibd(&self.0).passed()
    }

    fn complement(&self) -> Self {
        PyDesign(designs::complement(&self.0))
    }

    fn __repr__(&self) -> String {
        format!("Design{}", self.0.params())
    }
}

#[pyfunction]
fn qr_design(p: u64) -> PyResult<PyDesign> {
    designs::qr_family(p).map(|ds| PyDesign(designs::develop(&ds))).map_err(design_err)
}

#[pyfunction]
fn twin_prime_design(p: u64) -> PyResult<PyDesign> {
    designs::twin_prime_family(p).map(|ds| PyDesign(designs::develop(&ds))).map_err(design_err)
}

#[pyfunction]
fn menon_design(m: u64) -> PyResult<PyDesign> {
    designs::menon_family(m).map(PyDesign).map_err(design_err)
}

/// Lexicographically least cyclic difference set, developed.
#[pyfunction]
#[pyo3(signature = (v, k, lam, budget = 10_000_000))]
fn find_design(py: Python<'_>, v: u64, k: u64, lam: u64, budget: u64) -> PyResult<PyDesign> {
    let params = DesignParams::new(v, k, lam).map_err(design_err)?;
    py.detach(|| designs::find_difference_set(params, budget))
        .map(|ds| PyDesign(designs::develop(&ds)))
        .map_err(design_err)
}

/// A root of the characteristic equation.
#[pyclass(name = "Root", module = "cretan_py", frozen, get_all)]
struct PyRoot {
    y: PyQuadExt,
    params: (u64, u64, u64),
    source: String,
    branch: String,
    admissible: bool,
}

#[pymethods]
impl PyRoot {
    fn __repr__(&self) -> String {
        format!("Root(y={}, {} {}, admissible={})", self.y.0, self.source, self.branch, self.admissible)
    }
}

#[pyfunction]
fn solve_characteristic(v: u64, k: u64, lam: u64) -> PyResult<Vec<PyRoot>> {
    let params = DesignParams::new(v, k, lam).map_err(design_err)?;
    let roots = cm::solve_characteristic(params).map_err(cretan_err)?;
    Ok(roots
        .into_iter()
        .map(|s| PyRoot {
            y: PyQuadExt(s.y),
            params: (s.params.v, s.params.k, s.params.lambda),
            source: s.source.to_string(),
            branch: s.branch.to_string(),
            admissible: s.admissible,
        })
        .collect())
}

/// An exact two-level Cretan matrix.
#[pyclass(name = "CretanMatrix", module = "cretan_py", frozen)]
struct PyCretanMatrix(cm::CretanMatrix);

#[pymethods]
impl PyCretanMatrix {
    #[getter]
    fn order(&self) -> usize {
        self.0.order()
    }

    #[getter]
    fn weight(&self) -> PyQuadExt {
        PyQuadExt(self.0.weight().clone())
    }

    #[getter]
    fn det_float(&self) -> f64 {
        self.0.det_float()
    }

    #[getter]
    fn y(&self) -> Option<PyQuadExt> {
        self.0.y().cloned().map(PyQuadExt)
    }

    #[getter]
    fn source(&self) -> Option<String> {
        self.0.provenance().map(|p| p.source.to_string())
    }

    #[getter]
    fn branch(&self) -> Option<String> {
        self.0.provenance().map(|p| p.branch.to_string())
    }

    /// `(value, count)` for each level.
    fn levels(&self) -> Vec<(PyQuadExt, usize)> {
        self.0.levels().iter().map(|l| (PyQuadExt(l.value.clone()), l.count)).collect()
    }

    fn entry(&self, i: usize, j: usize) -> PyResult<PyQuadExt> {
        let n = self.0.order();
        if i >= n || j >= n {
            return Err(PyValueError::new_err(format!("index ({i}, {j}) outside order {n}")));
        }
        Ok(PyQuadExt(self.0.entry(i, j).clone()))
    }

    fn to_list(&self) -> PyResult<Vec<Vec<f64>>> {
        self.0.to_f64_rows().map_err(field_err)
    }

    /// Number of symbolic defects found by exact verification.
    fn defect_count(&self) -> usize {
        cm::verify_exact(&self.0).defect_count()
    }

    fn verify_exact(&self) -> bool {
        cm::verify_exact(&self.0).passed()
    }

    fn __repr__(&self) -> String {
        format!("CretanMatrix(order={}, weight={})", self.0.order(), self.0.weight())
    }
}

/// Every admissible matrix from a design and its complement.
#[pyclass(name = "Solutions", module = "cretan_py", frozen)]
struct PySolutions(cm::Solutions);

#[pymethods]
impl PySolutions {
    #[getter]
    fn matrices(&self) -> Vec<PyCretanMatrix> {
        self.0.matrices.iter().cloned().map(PyCretanMatrix).collect()
    }

    #[getter]
    fn classification(&self) -> Option<String> {
        self.0.classification.map(|c| {
            serde_json::to_value(c).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()
        })
    }

    fn principal(&self) -> Option<PyCretanMatrix> {
        self.0.principal().cloned().map(PyCretanMatrix)
    }

    fn __len__(&self) -> usize {
        self.0.matrices.len()
    }
}

#[pyfunction]
fn all_solutions(design: &PyDesign) -> PyResult<PySolutions> {
    cm::all_solutions(design.0.params(), &design.0).map(PySolutions).map_err(cretan_err)
}

fn float_matrix(rows: Vec<Vec<f64>>) -> PyResult<numeric::FloatMatrix> {
    numeric::FloatMatrix::from_rows(&rows).ok_or_else(|| PyValueError::new_err("matrix must be square"))
}

/// Deviations of `M M^T` from `omega I`; `omega` defaults to the mean diagonal.
#[pyfunction]
#[pyo3(signature = (rows, omega = None))]
fn residual<'py>(py: Python<'py>, rows: Vec<Vec<f64>>, omega: Option<f64>) -> PyResult<Bound<'py, PyDict>> {
    let m = float_matrix(rows)?;
    let r = match omega {
        Some(w) => numeric::residual_against(&m, w),
        None => numeric::residual(&m),
    };
    let d = PyDict::new(py);
    d.set_item("max_offdiag", r.max_offdiag)?;
    d.set_item("max_diag_dev", r.max_diag_dev)?;
    d.set_item("fitted_omega", r.fitted_omega)?;
    d.set_item("decimal_places", r.decimal_places)?;
    Ok(d)
}

#[pyfunction]
fn float_det(rows: Vec<Vec<f64>>) -> PyResult<f64> {
    Ok(numeric::float_det(&float_matrix(rows)?).value)
}

#[pyclass(name = "SearchResult", module = "cretan_py", frozen)]
struct PySearchResult(numeric::SearchResult);

#[pymethods]
impl PySearchResult {
    #[getter]
    fn template(&self) -> String {
        self.0.template.clone()
    }

    #[getter]
    fn order(&self) -> usize {
        self.0.order
    }

    #[getter]
    fn levels(&self) -> Vec<f64> {
        self.0.levels.clone()
    }

    #[getter]
    fn fitted_omega(&self) -> f64 {
        self.0.residual.fitted_omega
    }

    #[getter]
    fn residual(&self) -> f64 {
        self.0.residual.max_residual()
    }

    #[getter]
    fn abs_det(&self) -> f64 {
        self.0.abs_det
    }

    #[getter]
    fn within_tolerance(&self) -> bool {
        self.0.within_tolerance
    }

    fn matrix(&self) -> Vec<Vec<f64>> {
        self.0.matrix.rows()
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.0).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn summary(&self) -> String {
        self.0.summary()
    }
}

/// Runs the seeded search over a built-in template (`circ5`, `s5d`, `dpo5`,
/// `a9`) or a template given as JSON text.
#[pyfunction]
#[pyo3(signature = (template, restarts = 32, max_iters = 4000, seed = 0, tol = 1e-5, workers = 0))]
fn search(
    py: Python<'_>,
    template: &str,
    restarts: usize,
    max_iters: usize,
    seed: u64,
    tol: f64,
    workers: usize,
) -> PyResult<PySearchResult> {
    let template = match SearchTemplate::builtin(template) {
        Some(t) => t,
        None => serde_json::from_str(template)
            .map_err(|e| PyValueError::new_err(format!("unknown template or bad JSON: {e}")))?,
    };
    let config = SearchConfig { restarts, max_iters, seed, tol, workers, ..SearchConfig::default() };
    py.detach(|| numeric::search(&template, &config)).map(PySearchResult).map_err(numeric_err)
}

#[pymodule]
fn cretan_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyQuadExt>()?;
    m.add_class::<PyDesign>()?;
    m.add_class::<PyRoot>()?;
    m.add_class::<PyCretanMatrix>()?;
    m.add_class::<PySolutions>()?;
    m.add_class::<PySearchResult>()?;
    m.add_function(wrap_pyfunction!(qr_design, m)?)?;
    m.add_function(wrap_pyfunction!(twin_prime_design, m)?)?;
    m.add_function(wrap_pyfunction!(menon_design, m)?)?;
    m.add_function(wrap_pyfunction!(find_design, m)?)?;
    m.add_function(wrap_pyfunction!(solve_characteristic, m)?)?;
    m.add_function(wrap_pyfunction!(all_solutions, m)?)?;
    m.add_function(wrap_pyfunction!(residual, m)?)?;
    m.add_function(wrap_pyfunction!(float_det, m)?)?;
    m.add_function(wrap_pyfunction!(search, m)?)?;
    Ok(())
}
