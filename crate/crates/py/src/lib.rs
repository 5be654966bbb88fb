//! Python bindings for `tdpair`. Matrices come back as lists of rows of
//! Python `complex`.

use num_complex::Complex64 as C64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use tdpair::blocktri::{dual_entries, entries_by_basis_change, entries_recursive, BlockTriMatrix, DualRoute};
use tdpair::construct::{build_w0, build_w1, fit_aw_constants, tridiagonal_residuals};
use tdpair::overlaps::{n2_closed_form, overlap_f, weights_and_orthogonality};
use tdpair::spectral::{dual_functionals, norm_coeffs, BasisKind, EigenBasis};
use tdpair::verify::{run_checks, Check, Profile};
use tdpair::{DenseMatrix, GenericityTolerances, ModelParams};

fn err(e: tdpair::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn rows(m: &DenseMatrix) -> Vec<Vec<C64>> {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

fn basis_kind(which: &str) -> PyResult<BasisKind> {
    match which {
        "psi" => Ok(BasisKind::Psi),
        "phi" => Ok(BasisKind::Phi),
        "psi-tilde" => Ok(BasisKind::PsiTilde),
        "phi-tilde" => Ok(BasisKind::PhiTilde),
        other => Err(PyValueError::new_err(format!("unknown basis `{other}`"))),
    }
}

/// Model parameters `(N, α, α*, φ, θ)`.
#[pyclass(name = "Params", frozen, from_py_object)]
#[derive(Clone)]
struct PyParams {
    inner: ModelParams,
}

#[pymethods]
impl PyParams {
    #[new]
    #[pyo3(signature = (n, alpha, alpha_star, phi, theta = 0.0))]
    fn new(n: usize, alpha: C64, alpha_star: C64, phi: C64, theta: f64) -> Self {
        PyParams {
            inner: ModelParams::new(n, alpha, alpha_star, phi, theta),
        }
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n
    }

    #[getter]
    fn alpha(&self) -> C64 {
        self.inner.alpha
    }

    #[getter]
    fn alpha_star(&self) -> C64 {
        self.inner.alpha_star
    }

    #[getter]
    fn phi(&self) -> C64 {
        self.inner.phi
    }

    #[getter]
    fn theta(&self) -> f64 {
        self.inner.theta
    }

    #[getter]
    fn q(&self) -> C64 {
        self.inner.q()
    }

    /// Messages for every genericity condition that fails; empty if valid.
    fn validate(&self) -> Vec<String> {
        self.inner
            .validate(&GenericityTolerances::default())
            .violations
            .iter()
            .map(|v| v.to_string())
            .collect()
    }

    fn eigenvalues(&self) -> Vec<C64> {
        self.inner.eigenvalues()
    }

    fn dual_eigenvalues(&self) -> Vec<C64> {
        self.inner.dual_eigenvalues()
    }

    fn with_n(&self, n: usize) -> Self {
        PyParams {
            inner: self.inner.with_n(n),
        }
    }

    fn __repr__(&self) -> String {
        let p = &self.inner;
        format!(
            "Params(n={}, alpha={}, alpha_star={}, phi={}, theta={})",
            p.n, p.alpha, p.alpha_star, p.phi, p.theta
        )
    }
}

/// `W₀` (`w = 0`) or `W₁` (`w = 1`) as a dense matrix.
#[pyfunction]
#[pyo3(signature = (params, w = 0))]
fn build(params: &PyParams, w: u8) -> PyResult<Vec<Vec<C64>>> {
    let m = match w {
        0 => build_w0(&params.inner),
        1 => build_w1(&params.inner),
        _ => return Err(PyValueError::new_err("w must be 0 or 1")),
    }
    .map_err(err)?;
    Ok(rows(&m))
}

/// Relative residuals of the two tridiagonal relations.
#[pyfunction]
fn tridiagonal_residual(params: &PyParams) -> PyResult<(f64, f64)> {
    let (a, b) = tridiagonal_residuals(&params.inner).map_err(err)?;
    Ok((a.relative, b.relative))
}

/// One dict per basis vector: `epsilons`, `level`, `rank`, `eigenvalue`, `vector`.
#[pyfunction]
#[pyo3(signature = (params, which = "psi"))]
fn basis<'py>(py: Python<'py>, params: &PyParams, which: &str) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let b = EigenBasis::new(&params.inner, basis_kind(which)?);
    (0..b.len())
        .map(|pos| {
            let d = PyDict::new(py);
            let idx = &b.indices[pos];
            d.set_item("epsilons", idx.epsilons.clone())?;
            d.set_item("level", idx.level)?;
            d.set_item("rank", idx.rank)?;
            d.set_item("eigenvalue", b.eigenvalues[pos])?;
            d.set_item("vector", b.vector(pos))?;
            Ok(d)
        })
        .collect()
}

fn block_dicts<'py>(py: Python<'py>, blocks: &BlockTriMatrix) -> PyResult<Vec<Bound<'py, PyDict>>> {
    (0..=blocks.n_factors)
        .map(|n| {
            let d = PyDict::new(py);
            d.set_item("n", n)?;
            d.set_item("A", rows(&blocks.a[n]))?;
            d.set_item("B", rows(&blocks.b[n]))?;
            d.set_item("C", rows(&blocks.c[n]))?;
            Ok(d)
        })
        .collect()
}

fn compute_blocks(p: &ModelParams, which: &str, method: &str) -> PyResult<BlockTriMatrix> {
    match (which, method) {
        ("direct", "recursive") => entries_recursive(p),
        ("direct", "oracle") => {
            let w1 = build_w1(p).map_err(err)?;
            let basis = EigenBasis::new(p, BasisKind::Psi);
            let duals = dual_functionals(p, BasisKind::Psi).map_err(err)?;
            let norms = norm_coeffs(p, false, GenericityTolerances::default().genericity).map_err(err)?;
            entries_by_basis_change(&w1, &basis, &duals, &norms)
        }
        ("dual", "recursive") => dual_entries(p, DualRoute::Substitution),
        ("dual", "oracle") => dual_entries(p, DualRoute::BasisChange),
        _ => {
            return Err(PyValueError::new_err(format!(
                "unknown blocks `{which}` / method `{method}`"
            )))
        }
    }
    .map_err(err)
}

/// Per-level blocks `A`, `B`, `C` (rows are target ranks).
#[pyfunction]
#[pyo3(signature = (params, which = "direct", method = "recursive"))]
fn blocks<'py>(py: Python<'py>, params: &PyParams, which: &str, method: &str) -> PyResult<Vec<Bound<'py, PyDict>>> {
    block_dicts(py, &compute_blocks(&params.inner, which, method)?)
}

/// The block-tridiagonal matrix assembled in level-major order.
#[pyfunction]
#[pyo3(signature = (params, which = "direct", method = "recursive"))]
fn assembled(params: &PyParams, which: &str, method: &str) -> PyResult<Vec<Vec<C64>>> {
    Ok(rows(&compute_blocks(&params.inner, which, method)?.assemble()))
}

/// Overlap table: `rows` of `(n, i, k, s, F)`, and `U`, `weights`,
/// `lambda_tilde`.
#[pyfunction]
fn overlaps<'py>(py: Python<'py>, params: &PyParams) -> PyResult<Bound<'py, PyDict>> {
    let t = overlap_f(&params.inner).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("rows", t.rows())?;
    d.set_item("U", t.u.clone())?;
    d.set_item("weights", t.weights.clone())?;
    d.set_item("lambda_tilde", t.lambda_tilde.clone())?;
    Ok(d)
}

/// Gram matrix of the overlaps under the weights and its deviation from
/// `diag(1/𝒩)`.
#[pyfunction]
fn orthogonality<'py>(py: Python<'py>, params: &PyParams) -> PyResult<Bound<'py, PyDict>> {
    let p = &params.inner;
    let t = overlap_f(p).map_err(err)?;
    let norms = norm_coeffs(p, false, GenericityTolerances::default().genericity).map_err(err)?;
    let r = weights_and_orthogonality(&t, &norms).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("gram", rows(&r.gram))?;
    d.set_item("max_diagonal_deviation", r.max_diagonal_deviation)?;
    d.set_item("max_off_diagonal", r.max_off_diagonal)?;
    d.set_item("weight_imag_ratio", r.weight_imag_ratio)?;
    Ok(d)
}

/// The three `N = 2` rational functions at `λ̃ₛ`.
#[pyfunction]
fn closed_form(params: &PyParams, s: usize) -> PyResult<Vec<C64>> {
    Ok(n2_closed_form(&params.inner, s).map_err(err)?.to_vec())
}

/// Relative residual of the Askey-Wilson fit for the pair.
#[pyfunction]
fn aw_residual(params: &PyParams) -> PyResult<f64> {
    let p = &params.inner;
    let a = build_w0(p).map_err(err)?;
    let b = build_w1(p).map_err(err)?;
    Ok(fit_aw_constants(&a, &b, p.q()).map_err(err)?.relative_residual)
}

/// Run checks (all by default) and return `(passed, report_json)`.
#[pyfunction]
#[pyo3(signature = (params, checks = None, profile = "default"))]
fn verify(params: &PyParams, checks: Option<Vec<String>>, profile: &str) -> PyResult<(bool, String)> {
    let profile: Profile = profile.parse().map_err(PyValueError::new_err)?;
    let checks: Vec<Check> = match checks {
        Some(names) => names
            .iter()
            .map(|n| n.parse())
            .collect::<Result<_, String>>()
            .map_err(PyValueError::new_err)?,
        None => Check::ALL.to_vec(),
    };
    let report = run_checks(&params.inner, &checks, &profile.tolerances()).map_err(err)?;
    let text = tdpair::export::to_json(&report).map_err(err)?;
    Ok((report.passed(), text))
}

#[pymodule]
fn pytdpair(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyParams>()?;
    m.add_function(wrap_pyfunction!(build, m)?)?;
    m.add_function(wrap_pyfunction!(tridiagonal_residual, m)?)?;
    m.add_function(wrap_pyfunction!(basis, m)?)?;
    m.add_function(wrap_pyfunction!(blocks, m)?)?;
    m.add_function(wrap_pyfunction!(assembled, m)?)?;
    m.add_function(wrap_pyfunction!(overlaps, m)?)?;
    m.add_function(wrap_pyfunction!(orthogonality, m)?)?;
    m.add_function(wrap_pyfunction!(closed_form, m)?)?;
    m.add_function(wrap_pyfunction!(aw_residual, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
