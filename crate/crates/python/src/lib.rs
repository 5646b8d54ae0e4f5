/*
Copyright 2026 The palm-cs Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/

//! Python bindings: operators, the solver, images, noise and the
//! reconstruction pipeline. Vectors cross the boundary as lists of floats,
//! images as `bytes` in row-major order.

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyBytes, PyDict};

use palm_core::experiment::{reconstruct_observed, ExperimentConfig, OperatorKind};
use palm_core::imageio::{load_pgm, read_pgm, save_pgm, test_pattern, write_pgm};
use palm_core::linops::{adjoint_matvec, matvec, Mat};
use palm_core::noise::{NoiseKind, NoiseSpec};
use palm_core::sensing::{
    basis_pair_from_spec, make_gaussian_orthonormal, make_partial_dct, operator_from_bytes,
    operator_to_bytes, read_operator, write_operator,
};
use palm_core::solver::{kkt_report, solve_from, PalmParams, PalmState};

fn to_py(err: palm_core::Error) -> PyErr {
    match err {
        palm_core::Error::Io { .. } => PyIOError::new_err(err.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

/// A dense `m × N` measurement operator.
#[pyclass(name = "SensingOperator", module = "palm_cs", frozen)]
pub struct PySensingOperator {
    inner: palm_core::SensingOperator,
}

#[pymethods]
impl PySensingOperator {
    /// Builds an operator from a list of rows.
    #[new]
    #[pyo3(signature = (rows, orthonormal = false))]
    fn new(rows: Vec<Vec<f64>>, orthonormal: bool) -> PyResult<Self> {
        let m = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n) {
            return Err(PyValueError::new_err("rows have different lengths"));
        }
        let mat = Mat::from_row_major(m, n, rows.concat()).map_err(to_py)?;
        let inner = palm_core::SensingOperator::new(mat, orthonormal).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn partial_dct(m: usize, n: usize, seed: u64) -> PyResult<Self> {
        make_partial_dct(m, n, seed).map(|inner| Self { inner }).map_err(to_py)
    }

    #[staticmethod]
    fn gaussian(m: usize, n: usize, seed: u64) -> PyResult<Self> {
        make_gaussian_orthonormal(m, n, seed).map(|inner| Self { inner }).map_err(to_py)
    }

    #[staticmethod]
    fn from_bytes(data: &[u8]) -> PyResult<Self> {
        operator_from_bytes(data).map(|inner| Self { inner }).map_err(to_py)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        read_operator(&path).map(|inner| Self { inner }).map_err(to_py)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        write_operator(&path, &self.inner).map_err(to_py)
    }

    fn to_bytes<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, &operator_to_bytes(&self.inner))
    }

    #[getter]
    fn rows(&self) -> usize {
        self.inner.rows()
    }

    #[getter]
    fn cols(&self) -> usize {
        self.inner.cols()
    }

    #[getter]
    fn rows_orthonormal(&self) -> bool {
        self.inner.rows_orthonormal()
    }

    /// `A·x`
    fn matvec(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        matvec(&self.inner, &x).map_err(to_py)
    }

    /// `Aᵀ·v`
    fn adjoint(&self, v: Vec<f64>) -> PyResult<Vec<f64>> {
        adjoint_matvec(&self.inner, &v).map_err(to_py)
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!(
            "SensingOperator(rows={}, cols={}, orthonormal={})",
            self.inner.rows(),
            self.inner.cols(),
            self.inner.rows_orthonormal()
        )
    }
}

/// Outcome of `solve`.
#[pyclass(name = "SolveResult", module = "palm_cs", frozen, get_all)]
pub struct PySolveResult {
    x: Vec<f64>,
    r: Vec<f64>,
    y: Vec<f64>,
    iterations: usize,
    converged: bool,
    mu: f64,
    beta: f64,
    feasibility_history: Vec<f64>,
    objective_history: Vec<f64>,
    kkt: Py<PyDict>,
}

#[pymethods]
impl PySolveResult {
    fn __repr__(&self) -> String {
        format!(
            "SolveResult(iterations={}, converged={}, n={})",
            self.iterations,
            self.converged,
            self.x.len()
        )
    }
}

/// Soft thresholding `sign(z)·max(|z| − alpha, 0)`.
#[pyfunction]
fn shrink(z: Vec<f64>, alpha: f64) -> PyResult<Vec<f64>> {
    palm_core::shrinkage::shrink(&z, alpha).map_err(to_py)
}

/// Solves `min ||x||₁ + ||r||²/(2μ)` subject to `A·x + r = b`.
#[pyfunction]
#[pyo3(signature = (
    op, b, *, mu = None, beta = None, tau = 1.0, gamma = 1.0,
    max_iter = 5000, tol = 1e-6, x0 = None
))]
#[allow(clippy::too_many_arguments)]
fn solve(
    py: Python<'_>,
    op: &PySensingOperator,
    b: Vec<f64>,
    mu: Option<f64>,
    beta: Option<f64>,
    tau: f64,
    gamma: f64,
    max_iter: usize,
    tol: f64,
    x0: Option<Vec<f64>>,
) -> PyResult<PySolveResult> {
    let a = &op.inner;
    let params = PalmParams {
        mu,
        beta,
        tau,
        gamma,
        max_iter,
        tol_feasibility: tol,
        tol_x_change: tol,
    };
    let mut start = PalmState::zeros(a.rows(), a.cols());
    if let Some(x0) = x0 {
        start.x = x0;
    }
    let res = solve_from(a, &b, &params, start, None).map_err(to_py)?;
    let kkt = kkt_report(a, &b, &res, res.mu).map_err(to_py)?;
    let dict = PyDict::new(py);
    dict.set_item("dual_feasibility", kkt.dual_feasibility)?;
    dict.set_item("complementarity", kkt.complementarity)?;
    dict.set_item("primal_feasibility", kkt.primal_feasibility)?;
    dict.set_item("multiplier_consistency", kkt.multiplier_consistency)?;
    Ok(PySolveResult {
        x: res.x,
        r: res.r,
        y: res.y,
        iterations: res.iterations,
        converged: res.converged,
        mu: res.mu,
        beta: res.beta,
        feasibility_history: res.feasibility_history,
        objective_history: res.objective_history,
        kkt: dict.unbind(),
    })
}

/// `√n · max |⟨φᵢ, ψⱼ⟩|` for a pair such as `"identity:hadamard8"`.
#[pyfunction]
#[pyo3(signature = (pair, n = 64, seed = 0))]
fn mutual_coherence(pair: &str, n: usize, seed: u64) -> PyResult<f64> {
    let pair = basis_pair_from_spec(pair, n, seed).map_err(to_py)?;
    Ok(palm_core::sensing::mutual_coherence(&pair))
}

/// An 8-bit grayscale image.
#[pyclass(name = "Image", module = "palm_cs", frozen)]
pub struct PyImage {
    inner: palm_core::GrayImage,
}

#[pymethods]
impl PyImage {
    #[new]
    fn new(width: usize, height: usize, pixels: Vec<u8>) -> PyResult<Self> {
        palm_core::GrayImage::new(width, height, pixels).map(|inner| Self { inner }).map_err(to_py)
    }

    #[staticmethod]
    fn test_pattern(width: usize, height: usize) -> Self {
        Self { inner: test_pattern(width, height) }
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        load_pgm(&path).map(|inner| Self { inner }).map_err(to_py)
    }

    #[staticmethod]
    fn from_pgm_bytes(data: &[u8]) -> PyResult<Self> {
        read_pgm(data).map(|inner| Self { inner }).map_err(to_py)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        save_pgm(&path, &self.inner).map_err(to_py)
    }

    #[pyo3(signature = (binary = true))]
    fn to_pgm_bytes<'py>(&self, py: Python<'py>, binary: bool) -> Bound<'py, PyBytes> {
        PyBytes::new(py, &write_pgm(&self.inner, binary))
    }

    #[getter]
    fn width(&self) -> usize {
        self.inner.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.inner.height()
    }

    #[getter]
    fn pixels<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, self.inner.pixels())
    }

    fn __repr__(&self) -> String {
        format!("Image({}×{})", self.inner.width(), self.inner.height())
    }
}

/// Corrupts `image` with `kind` (gaussian, salt_pepper, speckle) at `level`.
#[pyfunction]
#[pyo3(signature = (image, kind, level, seed = 0))]
fn add_noise(image: &PyImage, kind: &str, level: f64, seed: u64) -> PyResult<PyImage> {
    let kind: NoiseKind = kind.parse().map_err(to_py)?;
    let spec = NoiseSpec::new(kind, level, seed).map_err(to_py)?;
    spec.apply(&image.inner).map(|inner| PyImage { inner }).map_err(to_py)
}

#[pyfunction]
fn rmse(reference: &PyImage, candidate: &PyImage) -> PyResult<f64> {
    palm_core::metrics::rmse(&reference.inner, &candidate.inner).map_err(to_py)
}

#[pyfunction]
fn psnr_from_rmse(rmse: f64) -> f64 {
    palm_core::metrics::psnr_from_rmse(rmse)
}

/// Compressively samples `observed` column by column and reconstructs it.
/// Quality is measured against `reference` (defaults to `observed`).
///
/// Returns `(image, psnr_db, rmse, elapsed_seconds)`.
#[pyfunction]
#[pyo3(signature = (observed, *, reference = None, ratio = 0.5, operator = "gaussian", seed = 0, max_iter = 5000))]
fn reconstruct(
    observed: &PyImage,
    reference: Option<&PyImage>,
    ratio: f64,
    operator: &str,
    seed: u64,
    max_iter: usize,
) -> PyResult<(PyImage, f64, f64, f64)> {
    let kind: OperatorKind = operator.parse().map_err(to_py)?;
    let mut cfg = ExperimentConfig::new(ratio, kind, seed);
    cfg.solver.max_iter = max_iter;
    let reference = reference.unwrap_or(observed);
    let rec = reconstruct_observed(&reference.inner, &observed.inner, &cfg).map_err(to_py)?;
    Ok((
        PyImage { inner: rec.image },
        rec.report.psnr_db,
        rec.report.rmse,
        rec.report.elapsed_seconds,
    ))
}

#[pymodule]
fn palm_cs(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySensingOperator>()?;
    m.add_class::<PySolveResult>()?;
    m.add_class::<PyImage>()?;
    m.add_function(wrap_pyfunction!(shrink, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(mutual_coherence, m)?)?;
    m.add_function(wrap_pyfunction!(add_noise, m)?)?;
    m.add_function(wrap_pyfunction!(rmse, m)?)?;
    m.add_function(wrap_pyfunction!(psnr_from_rmse, m)?)?;
    m.add_function(wrap_pyfunction!(reconstruct, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
