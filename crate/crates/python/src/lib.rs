//! Python bindings. Matrices cross the boundary as lists of rows.

use iwpca::algorithms::{self as alg, Algorithm, WeightRule, WeightScheme, WeightVector};
use iwpca::evaluation;
use iwpca::ingest::sign_of;
use iwpca::matrix::{DenseMatrix, Projection};
use iwpca::Error;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io(_) | Error::BisectionStall { .. } | Error::NoConvergence { .. } => {
            PyRuntimeError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn dense(rows: Vec<Vec<f64>>) -> PyResult<DenseMatrix> {
    DenseMatrix::from_rows(&rows).map_err(to_py)
}

#[pyclass(name = "Projection", module = "iwpca", frozen)]
pub struct PyProjection {
    inner: Projection,
}

#[pymethods]
impl PyProjection {
    /// Builds a projection from a `dim x rank` orthonormal basis given as rows.
    #[new]
    fn new(basis: Vec<Vec<f64>>) -> PyResult<Self> {
        let dim = basis.len();
        let rank = basis.first().map_or(0, Vec::len);
        if basis.iter().any(|row| row.len() != rank) {
            return Err(PyValueError::new_err("basis rows differ in length"));
        }
        let flat = basis.into_iter().flatten().collect();
        let inner = Projection::from_basis(dim, rank, flat).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn rank(&self) -> usize {
        self.inner.rank()
    }

    fn basis(&self) -> Vec<Vec<f64>> {
        let r = self.inner.rank();
        if r == 0 {
            return vec![Vec::new(); self.inner.dim()];
        }
        self.inner.basis().chunks(r).map(<[f64]>::to_vec).collect()
    }

    fn matrix(&self) -> Vec<Vec<f64>> {
        self.inner.matrix().to_rows()
    }

    fn diagonal(&self) -> Vec<f64> {
        self.inner.matrix().diagonal()
    }

    fn __repr__(&self) -> String {
        format!(
            "Projection(dim={}, rank={})",
            self.inner.dim(),
            self.inner.rank()
        )
    }
}

#[pyclass(name = "SolveReport", module = "iwpca", frozen, get_all)]
pub struct PySolveReport {
    objective_value: f64,
    achieved_rank: usize,
    multiplier: f64,
    iterations: usize,
    degenerate_cut: bool,
}

impl From<alg::SolveReport> for PySolveReport {
    fn from(r: alg::SolveReport) -> Self {
        Self {
            objective_value: r.objective_value,
            achieved_rank: r.achieved_rank,
            multiplier: r.multiplier,
            iterations: r.iterations,
            degenerate_cut: r.degenerate_cut,
        }
    }
}

#[pymethods]
impl PySolveReport {
    fn __repr__(&self) -> String {
        format!(
            "SolveReport(objective_value={}, achieved_rank={}, multiplier={}, iterations={}, degenerate_cut={})",
            self.objective_value,
            self.achieved_rank,
            self.multiplier,
            self.iterations,
            if self.degenerate_cut { "True" } else { "False" }
        )
    }
}

#[pyclass(name = "EvalReport", module = "iwpca", frozen)]
pub struct PyEvalReport {
    inner: evaluation::EvalReport,
}

#[pymethods]
impl PyEvalReport {
    #[getter]
    fn algorithm(&self) -> String {
        self.inner.algorithm.clone()
    }

    #[getter]
    fn weight_scheme(&self) -> Option<String> {
        self.inner.weight_scheme.map(|s| s.as_str().to_string())
    }

    #[getter]
    fn rank(&self) -> usize {
        self.inner.rank
    }

    #[getter]
    fn mean_auc(&self) -> f64 {
        self.inner.mean_auc
    }

    #[getter]
    fn scored_items(&self) -> Vec<usize> {
        self.inner.scored_items.clone()
    }

    #[getter]
    fn per_item_auc(&self) -> Vec<f64> {
        self.inner.per_item_auc.clone()
    }

    #[getter]
    fn excluded_items(&self) -> Vec<usize> {
        self.inner.excluded_items.iter().map(|e| e.item).collect()
    }

    fn auc_of(&self, item: usize) -> Option<f64> {
        self.inner.auc_of(item)
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    fn __repr__(&self) -> String {
        format!(
            "EvalReport(algorithm={:?}, rank={}, mean_auc={}, scored={})",
            self.inner.algorithm,
            self.inner.rank,
            self.inner.mean_auc,
            self.inner.scored_items.len()
        )
    }
}

fn fitted(pair: (Projection, alg::SolveReport)) -> (PyProjection, PySolveReport) {
    (PyProjection { inner: pair.0 }, pair.1.into())
}

fn weight_vector(x: &DenseMatrix, weights: Option<Vec<f64>>) -> PyResult<WeightVector> {
    match weights {
        Some(w) => WeightVector::new(w, WeightScheme::Custom).map_err(to_py),
        None => Ok(alg::weights_inverse_sign_norm(&sign_of(x))),
    }
}

fn algorithm(name: &str, keep_zero_cols: bool) -> PyResult<Algorithm> {
    match name {
        "vanilla" => Ok(Algorithm::Vanilla),
        "colnorm" => Ok(Algorithm::ColumnNormalized { keep_zero_cols }),
        "iwpca" => Ok(Algorithm::ItemWeighted {
            weights: WeightRule::InverseSignNorm,
        }),
        other => Err(PyValueError::new_err(format!(
            "unknown algorithm {other:?} (vanilla, colnorm, iwpca)"
        ))),
    }
}

/// Maximizes `tr(A P)` over rank-`r` fantope extreme points.
#[pyfunction]
fn fantope_linmax(a: Vec<Vec<f64>>, r: usize) -> PyResult<(PyProjection, PySolveReport)> {
    alg::fantope_linmax(&dense(a)?, r)
        .map(fitted)
        .map_err(to_py)
}

#[pyfunction]
fn vanilla_pca(x: Vec<Vec<f64>>, r: usize) -> PyResult<PyProjection> {
    let inner = alg::vanilla_pca(&dense(x)?, r).map_err(to_py)?;
    Ok(PyProjection { inner })
}

#[pyfunction]
#[pyo3(signature = (x, r, keep_zero_cols = false))]
fn column_normalized_pca(
    x: Vec<Vec<f64>>,
    r: usize,
    keep_zero_cols: bool,
) -> PyResult<PyProjection> {
    let inner = alg::column_normalized_pca(&dense(x)?, r, keep_zero_cols).map_err(to_py)?;
    Ok(PyProjection { inner })
}

#[pyfunction]
fn weights_inverse_sign_norm(x: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
    let w = alg::weights_inverse_sign_norm(&sign_of(&dense(x)?));
    Ok(w.weights().to_vec())
}

/// Item-Weighted PCA. Weights default to the inverse sign-column norms;
/// `error_slack` switches on the reconstruction-error constraint.
#[pyfunction]
#[pyo3(signature = (x, r, weights = None, error_slack = None))]
fn item_weighted_pca(
    x: Vec<Vec<f64>>,
    r: usize,
    weights: Option<Vec<f64>>,
    error_slack: Option<f64>,
) -> PyResult<(PyProjection, PySolveReport)> {
    let x = dense(x)?;
    let w = weight_vector(&x, weights)?;
    let out = match error_slack {
        Some(slack) => alg::item_weighted_pca_constrained(&x, &w, r, slack),
        None => alg::item_weighted_pca(&x, &w, r),
    };
    out.map(fitted).map_err(to_py)
}

#[pyfunction]
fn zero_diagonal_scores(x: Vec<Vec<f64>>, projection: &PyProjection) -> PyResult<Vec<Vec<f64>>> {
    let s = evaluation::zero_diagonal_scores(&dense(x)?, &projection.inner).map_err(to_py)?;
    Ok(s.to_rows())
}

#[pyfunction]
fn auc(scores: Vec<f64>, labels: Vec<bool>) -> PyResult<Option<f64>> {
    if scores.len() != labels.len() {
        return Err(PyValueError::new_err("scores and labels differ in length"));
    }
    Ok(evaluation::auc(&scores, &labels))
}

#[pyfunction]
fn item_auc(x: Vec<Vec<f64>>, projection: &PyProjection) -> PyResult<PyEvalReport> {
    let inner = evaluation::item_auc(&dense(x)?, &projection.inner).map_err(to_py)?;
    Ok(PyEvalReport { inner })
}

/// Evaluates each named algorithm (vanilla, colnorm, iwpca) at each rank.
#[pyfunction]
#[pyo3(signature = (x, algorithms, ranks, keep_zero_cols = false))]
fn rank_sweep(
    x: Vec<Vec<f64>>,
    algorithms: Vec<String>,
    ranks: Vec<usize>,
    keep_zero_cols: bool,
) -> PyResult<Vec<PyEvalReport>> {
    let algs = algorithms
        .iter()
        .map(|n| algorithm(n, keep_zero_cols))
        .collect::<PyResult<Vec<_>>>()?;
    let reports = evaluation::rank_sweep(&dense(x)?, &algs, &ranks).map_err(to_py)?;
    Ok(reports
        .into_iter()
        .map(|inner| PyEvalReport { inner })
        .collect())
}

/// Returns `(alpha, report)` pairs for each removal fraction.
#[pyfunction]
#[pyo3(signature = (x, algorithm_name, r, alphas, seed = 0))]
fn robustness_sweep(
    x: Vec<Vec<f64>>,
    algorithm_name: &str,
    r: usize,
    alphas: Vec<f64>,
    seed: u64,
) -> PyResult<Vec<(f64, PyEvalReport)>> {
    let alg = algorithm(algorithm_name, true)?;
    let points = evaluation::robustness_sweep(&dense(x)?, &alg, r, &alphas, seed).map_err(to_py)?;
    Ok(points
        .into_iter()
        .map(|p| (p.alpha, PyEvalReport { inner: p.report }))
        .collect())
}

#[pymodule]
#[pyo3(name = "iwpca")]
fn iwpca_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyProjection>()?;
    m.add_class::<PySolveReport>()?;
    m.add_class::<PyEvalReport>()?;
    m.add_function(wrap_pyfunction!(fantope_linmax, m)?)?;
    m.add_function(wrap_pyfunction!(vanilla_pca, m)?)?;
    m.add_function(wrap_pyfunction!(column_normalized_pca, m)?)?;
    m.add_function(wrap_pyfunction!(weights_inverse_sign_norm, m)?)?;
    m.add_function(wrap_pyfunction!(item_weighted_pca, m)?)?;
    m.add_function(wrap_pyfunction!(zero_diagonal_scores, m)?)?;
    m.add_function(wrap_pyfunction!(auc, m)?)?;
    m.add_function(wrap_pyfunction!(item_auc, m)?)?;
    m.add_function(wrap_pyfunction!(rank_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(robustness_sweep, m)?)?;
    Ok(())
}
