//! Python bindings: `pyqut.QutMatrix`, `pyqut.diagonalize` and friends.

use std::collections::BTreeMap;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use qut::chebyshev::Side;
use qut::cli::report::SpectrumReport;
use qut::cli::spec::MatrixSpec;
use qut::oracle::{eig_all, sturm_count, DenseTridiag};
use qut::presets::{self, Preset};
use qut::spectrum::{Branch, SpectralMode};
use qut::{Error, SolveOptions, Spectrum};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::ZeroCoupling { .. }
        | Error::BlockMismatch { .. }
        | Error::BadIndices { .. }
        | Error::Shape(_)
        | Error::NonFinite { .. }
        | Error::InvalidArgument(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

/// Symmetric tridiagonal matrix whose rows `u..=v` (1-based) are uniform.
#[pyclass(name = "QutMatrix", module = "pyqut", frozen)]
struct PyQutMatrix {
    inner: qut::QutMatrix,
}

#[pymethods]
impl PyQutMatrix {
    #[new]
    #[pyo3(signature = (diag, offdiag, u, v, bulk_a, bulk_b))]
    fn new(
        diag: Vec<f64>,
        offdiag: Vec<f64>,
        u: usize,
        v: usize,
        bulk_a: f64,
        bulk_b: f64,
    ) -> PyResult<Self> {
        let inner = qut::QutMatrix::new(diag, offdiag, u, v, bulk_a, bulk_b).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn uniform(ell: usize, a: f64, b: f64) -> PyResult<Self> {
        let inner = qut::QutMatrix::uniform(ell, a, b).map_err(to_py)?;
        Ok(Self { inner })
    }

    /// Bulk `(a, b)` with explicit boundary rows; `right_a` lists the last
    /// rows in order.
    #[staticmethod]
    #[pyo3(signature = (ell, a, b, left_a=vec![], left_b=vec![], right_a=vec![], right_b=vec![]))]
    fn from_edges(
        ell: usize,
        a: f64,
        b: f64,
        left_a: Vec<f64>,
        left_b: Vec<f64>,
        right_a: Vec<f64>,
        right_b: Vec<f64>,
    ) -> PyResult<Self> {
        let inner = qut::QutMatrix::from_edges(ell, a, b, &left_a, &left_b, &right_a, &right_b)
            .map_err(to_py)?;
        Ok(Self { inner })
    }

    /// Same JSON accepted by `qut solve`.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let spec = MatrixSpec::from_json(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        let inner = spec.build().map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn ell(&self) -> usize {
        self.inner.ell()
    }

    #[getter]
    fn diag(&self) -> Vec<f64> {
        self.inner.diag().to_vec()
    }

    #[getter]
    fn offdiag(&self) -> Vec<f64> {
        self.inner.offdiag().to_vec()
    }

    #[getter]
    fn block(&self) -> (usize, usize) {
        (self.inner.u(), self.inner.v())
    }

    #[getter]
    fn bulk(&self) -> (f64, f64) {
        (self.inner.bulk_a(), self.inner.bulk_b())
    }

    fn is_mirror_symmetric(&self) -> bool {
        self.inner.is_mirror_symmetric()
    }

    /// Dense row-major copy.
    fn to_dense(&self) -> Vec<Vec<f64>> {
        let ell = self.inner.ell();
        let mut rows = vec![vec![0.0; ell]; ell];
        for (i, &d) in self.inner.diag().iter().enumerate() {
            rows[i][i] = d;
        }
        for (i, &b) in self.inner.offdiag().iter().enumerate() {
            rows[i][i + 1] = b;
            rows[i + 1][i] = b;
        }
        rows
    }

    /// Number of eigenvalues strictly below `x`.
    fn sturm_count(&self, x: f64) -> usize {
        sturm_count(&DenseTridiag::from(&self.inner), x)
    }

    /// Reference eigenvalues (descending) and optional vectors from
    /// bisection and inverse iteration.
    #[pyo3(signature = (vectors=false))]
    fn oracle(&self, vectors: bool) -> PyResult<(Vec<f64>, Option<Vec<Vec<f64>>>)> {
        eig_all(&DenseTridiag::from(&self.inner), vectors).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!(
            "QutMatrix(ell={}, block=({}, {}), bulk=({}, {}))",
            self.inner.ell(),
            self.inner.u(),
            self.inner.v(),
            self.inner.bulk_a(),
            self.inner.bulk_b()
        )
    }
}

/// One eigenmode, in-band (`k`) or out-of-band (`p`).
#[pyclass(name = "Mode", module = "pyqut", frozen)]
struct PyMode {
    inner: SpectralMode,
    first: f64,
}

#[pymethods]
impl PyMode {
    /// `"in-band"`, `"above"` or `"below"`.
    #[getter]
    fn branch(&self) -> &'static str {
        match self.inner.branch {
            Branch::InBand { .. } => "in-band",
            Branch::OutOfBand {
                side: Side::Above, ..
            } => "above",
            Branch::OutOfBand {
                side: Side::Below, ..
            } => "below",
        }
    }

    #[getter]
    fn eigenvalue(&self) -> f64 {
        self.inner.lambda
    }

    #[getter]
    fn k(&self) -> Option<f64> {
        self.inner.k()
    }

    #[getter]
    fn p(&self) -> Option<f64> {
        self.inner.p()
    }

    #[getter]
    fn phi(&self) -> Option<f64> {
        self.inner.phi
    }

    #[getter]
    fn dos(&self) -> Option<f64> {
        self.inner.dos_weight
    }

    #[getter]
    fn residual(&self) -> f64 {
        self.inner.residual
    }

    #[getter]
    fn first_component(&self) -> f64 {
        self.first
    }

    fn __repr__(&self) -> String {
        format!(
            "Mode(branch={:?}, eigenvalue={})",
            self.branch(),
            self.inner.lambda
        )
    }
}

#[pyclass(name = "Spectrum", module = "pyqut", frozen)]
struct PySpectrum {
    inner: Spectrum,
}

#[pymethods]
impl PySpectrum {
    /// Descending.
    #[getter]
    fn eigenvalues(&self) -> Vec<f64> {
        self.inner.eigenvalues.clone()
    }

    /// Rows in the order of `eigenvalues`, or `None`.
    #[getter]
    fn vectors(&self) -> Option<Vec<Vec<f64>>> {
        self.inner.vectors.clone()
    }

    #[getter]
    fn first_components(&self) -> Vec<f64> {
        self.inner.eigvec_first.clone()
    }

    #[getter]
    fn modes(&self) -> Vec<PyMode> {
        self.inner
            .modes
            .iter()
            .zip(&self.inner.eigvec_first)
            .map(|(m, &first)| PyMode {
                inner: m.clone(),
                first,
            })
            .collect()
    }

    /// `{"in_band": …, "above_band": …, "below_band": …}`
    #[getter]
    fn counts(&self) -> BTreeMap<&'static str, usize> {
        let c = self.inner.counts;
        BTreeMap::from([
            ("in_band", c.in_band),
            ("above_band", c.above_band),
            ("below_band", c.below_band),
        ])
    }

    fn orthogonality_residual(&self) -> Option<f64> {
        self.inner.orthogonality_residual()
    }

    /// Same document as `qut solve`.
    #[pyo3(signature = (tol=1e-8))]
    fn to_json(&self, tol: f64) -> String {
        SpectrumReport::new(&self.inner, tol).to_json()
    }

    fn __len__(&self) -> usize {
        self.inner.eigenvalues.len()
    }
}

#[pyfunction]
#[pyo3(signature = (m, vectors=false))]
fn diagonalize(py: Python<'_>, m: &PyQutMatrix, vectors: bool) -> PyResult<PySpectrum> {
    let opts = SolveOptions {
        want_vectors: vectors,
        ..Default::default()
    };
    let inner = py
        .detach(|| qut::diagonalize(&m.inner, opts))
        .map_err(to_py)?;
    Ok(PySpectrum { inner })
}

/// A named family: `"two-edge"`, `"deep-edge"` or `"asymmetric"`.
#[pyfunction]
#[pyo3(signature = (name, ell, **params))]
fn preset(name: &str, ell: usize, params: Option<BTreeMap<String, f64>>) -> PyResult<PyQutMatrix> {
    let p: Preset = name.parse().map_err(to_py)?;
    let inner = p.build(ell, &params.unwrap_or_default()).map_err(to_py)?;
    Ok(PyQutMatrix { inner })
}

/// Large-size limit of `Σ O²_{k1}` over in-band modes of the two-edge family.
#[pyfunction]
#[pyo3(signature = (x, y, points=64))]
fn norm_integral(x: f64, y: f64, points: usize) -> PyResult<f64> {
    presets::two_edge_norm_integral(x, y, points).map_err(to_py)
}

#[pymodule]
fn pyqut(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyQutMatrix>()?;
    m.add_class::<PySpectrum>()?;
    m.add_class::<PyMode>()?;
    m.add_function(wrap_pyfunction!(diagonalize, m)?)?;
    m.add_function(wrap_pyfunction!(preset, m)?)?;
    m.add_function(wrap_pyfunction!(norm_integral, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
