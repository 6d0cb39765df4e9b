//! Python bindings: data matrices, binary codes, circulant and baseline
//! encoders, training, and the evaluation routines.

use std::path::PathBuf;

use cbe_core::dataio::{self, ParamsFile};
use cbe_core::embedding::{self, Encoder as _, Method};
use cbe_core::evaluation::{self, TimingConfig, TimingMethod};
use cbe_core::optimizer::{self, GdSettings, OptConfig, PairConstraints, SolverMode};
use cbe_core::{dsp, CbeError};
use num_complex::Complex64;
use pyo3::exceptions::{PyArithmeticError, PyIndexError, PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyBytes;

fn to_py(e: CbeError) -> PyErr {
    let msg = e.to_string();
    match e.root() {
        CbeError::Io(_) => PyOSError::new_err(msg),
        CbeError::OutOfRange { .. } => PyIndexError::new_err(msg),
        CbeError::Unbounded(_) | CbeError::Numerical(_) => PyArithmeticError::new_err(msg),
        _ => PyValueError::new_err(msg),
    }
}

trait IntoPy<T> {
    fn py_err(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for cbe_core::Result<T> {
    fn py_err(self) -> PyResult<T> {
        self.map_err(to_py)
    }
}

fn parse_method(name: &str) -> PyResult<Method> {
    name.parse().py_err()
}

/// Row-major matrix of finite float32 values.
#[pyclass(name = "DataMatrix", module = "cbe", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyDataMatrix(cbe_core::DataMatrix);

#[pymethods]
impl PyDataMatrix {
    #[new]
    fn new(rows: Vec<Vec<f32>>) -> PyResult<Self> {
        cbe_core::DataMatrix::from_rows(&rows).py_err().map(Self)
    }

    #[staticmethod]
    fn from_flat(n: usize, d: usize, data: Vec<f32>) -> PyResult<Self> {
        cbe_core::DataMatrix::new(n, d, data).py_err().map(Self)
    }

    #[staticmethod]
    fn read(path: PathBuf) -> PyResult<Self> {
        dataio::read_matrix(path).py_err().map(Self)
    }

    fn write(&self, path: PathBuf) -> PyResult<()> {
        dataio::write_matrix(path, &self.0).py_err()
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    #[getter]
    fn d(&self) -> usize {
        self.0.d()
    }

    fn row(&self, i: usize) -> PyResult<Vec<f32>> {
        if i >= self.0.n() {
            return Err(to_py(CbeError::OutOfRange {
                index: i,
                len: self.0.n(),
            }));
        }
        Ok(self.0.row(i).to_vec())
    }

    fn to_list(&self) -> Vec<Vec<f32>> {
        self.0.rows().map(<[f32]>::to_vec).collect()
    }

    fn normalized(&self) -> PyResult<Self> {
        cbe_core::normalize_rows(&self.0).py_err().map(Self)
    }

    fn select_rows(&self, indices: Vec<usize>) -> PyResult<Self> {
        self.0.select_rows(&indices).py_err().map(Self)
    }

    fn __len__(&self) -> usize {
        self.0.n()
    }

    fn __repr__(&self) -> String {
        format!("DataMatrix(n={}, d={})", self.0.n(), self.0.d())
    }
}

/// Bit-packed binary codes, least significant bit first.
#[pyclass(name = "BinaryCodes", module = "cbe", frozen, eq, skip_from_py_object)]
#[derive(Clone, PartialEq)]
pub struct PyBinaryCodes(embedding::BinaryCodes);

#[pymethods]
impl PyBinaryCodes {
    #[staticmethod]
    fn from_packed(n: usize, k: usize, packed: Vec<u8>) -> PyResult<Self> {
        embedding::BinaryCodes::from_packed(n, k, packed)
            .py_err()
            .map(Self)
    }

    #[staticmethod]
    fn read(path: PathBuf) -> PyResult<Self> {
        dataio::read_codes(path).py_err().map(Self)
    }

    fn write(&self, path: PathBuf) -> PyResult<()> {
        dataio::write_codes(path, &self.0).py_err()
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n()
    }

    #[getter]
    fn k(&self) -> usize {
        self.0.k()
    }

    fn packed<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, self.0.packed())
    }

    fn row<'py>(&self, py: Python<'py>, i: usize) -> PyResult<Bound<'py, PyBytes>> {
        if i >= self.0.n() {
            return Err(to_py(CbeError::OutOfRange {
                index: i,
                len: self.0.n(),
            }));
        }
        Ok(PyBytes::new(py, self.0.row(i)))
    }

    /// Code of row `i` as a list of 0/1 values.
    fn bits(&self, i: usize) -> PyResult<Vec<u32>> {
        if i >= self.0.n() {
            return Err(to_py(CbeError::OutOfRange {
                index: i,
                len: self.0.n(),
            }));
        }
        Ok((0..self.0.k())
            .map(|j| u32::from(self.0.bit(i, j)))
            .collect())
    }

    fn hamming(&self, i: usize, j: usize) -> PyResult<u32> {
        self.0.hamming(i, j).py_err()
    }

    fn hamming_to(&self, i: usize, other: &PyBinaryCodes, j: usize) -> PyResult<u32> {
        self.0.hamming_to(i, &other.0, j).py_err()
    }

    fn __len__(&self) -> usize {
        self.0.n()
    }

    fn __repr__(&self) -> String {
        format!("BinaryCodes(n={}, k={})", self.0.n(), self.0.k())
    }
}

/// Circulant embedding `sign(circ(r) D x)`.
#[pyclass(name = "CirculantParams", module = "cbe", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyCirculantParams(embedding::CirculantParams);

#[pymethods]
impl PyCirculantParams {
    #[new]
    fn new(r: Vec<f64>, signs: Vec<i8>, k: usize) -> PyResult<Self> {
        embedding::CirculantParams::new(r, signs, k)
            .py_err()
            .map(Self)
    }

    #[staticmethod]
    fn random(d: usize, k: usize, seed: u64) -> PyResult<Self> {
        embedding::cbe_random(d, k, seed).py_err().map(Self)
    }

    #[getter]
    fn d(&self) -> usize {
        self.0.dim()
    }

    #[getter]
    fn k(&self) -> usize {
        self.0.k()
    }

    #[getter]
    fn r(&self) -> Vec<f64> {
        self.0.r().to_vec()
    }

    #[getter]
    fn signs(&self) -> Vec<i8> {
        self.0.signs().to_vec()
    }

    /// `circ(r) D x` for the first generator.
    fn project(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        self.0.primary().project(&x).py_err()
    }

    fn encode<'py>(&self, py: Python<'py>, x: Vec<f64>) -> PyResult<Bound<'py, PyBytes>> {
        let code = embedding::cbe_encode(&self.0, &x).py_err()?;
        Ok(PyBytes::new(py, &code))
    }

    fn encode_matrix(&self, py: Python<'_>, x: &PyDataMatrix) -> PyResult<PyBinaryCodes> {
        py.detach(|| embedding::encode_matrix(&self.0, &x.0))
            .py_err()
            .map(PyBinaryCodes)
    }

    #[pyo3(signature = (path, seed=0, method="cbe-rand"))]
    fn save(&self, path: PathBuf, seed: u64, method: &str) -> PyResult<()> {
        let method = parse_method(method)?;
        dataio::write_params(path, &ParamsFile::circulant(method, seed, self.0.clone())).py_err()
    }

    fn __repr__(&self) -> String {
        format!("CirculantParams(d={}, k={})", self.0.dim(), self.0.k())
    }
}

/// Any encoder: `cbe-rand`, `cbe-opt` (from a params file), `lsh`,
/// `bilinear` or `fjlt`, optionally behind a block Hadamard preconditioner.
#[pyclass(name = "Encoder", module = "cbe", frozen, skip_from_py_object)]
pub struct PyEncoder {
    method: Method,
    inner: Box<dyn embedding::Encoder>,
}

#[pymethods]
impl PyEncoder {
    #[staticmethod]
    #[pyo3(signature = (method, d, k, seed=0, density=embedding::DEFAULT_DENSITY, precondition_block=None))]
    fn random(
        method: &str,
        d: usize,
        k: usize,
        seed: u64,
        density: f64,
        precondition_block: Option<usize>,
    ) -> PyResult<Self> {
        let method = parse_method(method)?;
        let enc = embedding::AnyEncoder::random(method, d, k, seed, density).py_err()?;
        let inner: Box<dyn embedding::Encoder> = match precondition_block {
            None => Box::new(enc),
            Some(b) => Box::new(embedding::Preconditioned {
                pre: embedding::Preconditioner::for_encoder_seed(d, b, seed).py_err()?,
                inner: enc,
            }),
        };
        Ok(Self { method, inner })
    }

    #[staticmethod]
    fn from_params_file(path: PathBuf) -> PyResult<Self> {
        let file = dataio::read_params(path).py_err()?;
        Ok(Self {
            method: file.method,
            inner: Box::new(file.to_encoder().py_err()?),
        })
    }

    #[staticmethod]
    fn circulant(params: &PyCirculantParams) -> Self {
        Self {
            method: Method::CbeRand,
            inner: Box::new(params.0.clone()),
        }
    }

    #[getter]
    fn method(&self) -> &'static str {
        self.method.name()
    }

    #[getter]
    fn input_dim(&self) -> usize {
        self.inner.input_dim()
    }

    #[getter]
    fn bits(&self) -> usize {
        self.inner.bits()
    }

    fn encode<'py>(&self, py: Python<'py>, x: Vec<f64>) -> PyResult<Bound<'py, PyBytes>> {
        let code = self.inner.encode(&x).py_err()?;
        Ok(PyBytes::new(py, &code))
    }

    fn encode_matrix(&self, py: Python<'_>, x: &PyDataMatrix) -> PyResult<PyBinaryCodes> {
        py.detach(|| embedding::encode_matrix(self.inner.as_ref(), &x.0))
            .py_err()
            .map(PyBinaryCodes)
    }

    fn __repr__(&self) -> String {
        format!(
            "Encoder({}, d={}, bits={})",
            self.method,
            self.inner.input_dim(),
            self.inner.bits()
        )
    }
}

/// Output of [`train`]: learned parameters and the objective trace as
/// `(iteration, step, objective)` tuples.
#[pyclass(name = "TrainResult", module = "cbe", frozen, get_all)]
pub struct PyTrainResult {
    params: Py<PyCirculantParams>,
    trace: Vec<(usize, &'static str, f64)>,
}

#[pyfunction]
#[pyo3(signature = (x, k, lam=1.0, mu=0.0, iters=10, tol=1e-4, seed=0, solver="radial", similar=vec![], dissimilar=vec![]))]
#[allow(clippy::too_many_arguments)]
fn train(
    py: Python<'_>,
    x: &PyDataMatrix,
    k: usize,
    lam: f64,
    mu: f64,
    iters: usize,
    tol: f64,
    seed: u64,
    solver: &str,
    similar: Vec<(usize, usize)>,
    dissimilar: Vec<(usize, usize)>,
) -> PyResult<PyTrainResult> {
    let mut config = OptConfig::new(k);
    config.lambda = lam;
    config.mu = mu;
    config.max_outer_iters = iters;
    config.objective_rel_tol = tol;
    config.solver_mode = solver_mode(solver)?;
    let constraints = PairConstraints::new(similar, dissimilar);
    let out = py
        .detach(|| optimizer::train(&x.0, &config, &constraints, seed))
        .py_err()?;
    Ok(PyTrainResult {
        params: Py::new(py, PyCirculantParams(out.params))?,
        trace: out
            .trace
            .iter()
            .map(|t| (t.iteration, t.step.name(), t.objective))
            .collect(),
    })
}

fn solver_mode(name: &str) -> PyResult<SolverMode> {
    match name {
        "radial" => Ok(SolverMode::RadialExact),
        "gd" => Ok(SolverMode::GradientDescent),
        other => Err(PyValueError::new_err(format!(
            "solver must be 'radial' or 'gd', got {other:?}"
        ))),
    }
}

#[pyfunction]
fn solve_dc(m: f64, h: f64, c: f64) -> PyResult<f64> {
    optimizer::solve_dc(m, h, c).py_err()
}

#[pyfunction]
#[pyo3(signature = (m, h, g, c, mode="radial", warm=(0.0, 0.0)))]
fn solve_pair(
    m: f64,
    h: f64,
    g: f64,
    c: f64,
    mode: &str,
    warm: (f64, f64),
) -> PyResult<(f64, f64)> {
    optimizer::solve_pair(m, h, g, c, solver_mode(mode)?, warm, &GdSettings::default()).py_err()
}

#[pyfunction]
fn fft(x: Vec<Complex64>) -> PyResult<Vec<Complex64>> {
    dsp::fft(&x).py_err().map(dsp::ComplexSpectrum::into_values)
}

#[pyfunction]
fn ifft(x: Vec<Complex64>) -> PyResult<Vec<Complex64>> {
    dsp::ifft(&dsp::ComplexSpectrum::new(x)).py_err()
}

#[pyfunction]
fn circulant_multiply(r: Vec<f64>, x: Vec<f64>) -> PyResult<Vec<f64>> {
    dsp::circulant_multiply(&r, &x).py_err()
}

#[pyfunction]
fn fwht(x: Vec<f64>) -> PyResult<Vec<f64>> {
    dsp::fwht(&x).py_err()
}

#[pyfunction]
fn circular_shift(x: Vec<f64>, t: i64) -> Vec<f64> {
    dsp::circular_shift(&x, t)
}

#[pyfunction]
fn synth_gaussian(n: usize, d: usize, seed: u64) -> PyResult<PyDataMatrix> {
    dataio::synth_gaussian(n, d, seed)
        .py_err()
        .map(PyDataMatrix)
}

#[pyfunction]
#[pyo3(signature = (n, d, n_clusters=10, spread=0.5, seed=0))]
fn synth_clustered(
    n: usize,
    d: usize,
    n_clusters: usize,
    spread: f64,
    seed: u64,
) -> PyResult<PyDataMatrix> {
    dataio::synth_clustered(n, d, n_clusters, spread, seed)
        .py_err()
        .map(PyDataMatrix)
}

#[pyclass(name = "AngleStats", module = "cbe", frozen, get_all)]
pub struct PyAngleStats {
    theta: f64,
    k: usize,
    trials: usize,
    mean_normalized_hamming: f64,
    empirical_variance: f64,
    rho: f64,
    bound: f64,
}

#[pyfunction]
#[pyo3(signature = (theta, d, k, trials, seed=0))]
fn angle_experiment(
    py: Python<'_>,
    theta: f64,
    d: usize,
    k: usize,
    trials: usize,
    seed: u64,
) -> PyResult<PyAngleStats> {
    let s = py
        .detach(|| evaluation::angle_experiment(theta, d, k, trials, seed))
        .py_err()?;
    Ok(PyAngleStats {
        theta: s.theta,
        k: s.k,
        trials: s.trials,
        mean_normalized_hamming: s.mean_normalized_hamming,
        empirical_variance: s.empirical_variance,
        rho: s.rho,
        bound: s.bound(),
    })
}

#[pyfunction]
fn ground_truth_knn(
    py: Python<'_>,
    x: &PyDataMatrix,
    queries: &PyDataMatrix,
    g: usize,
) -> PyResult<Vec<Vec<usize>>> {
    py.detach(|| evaluation::ground_truth_knn(&x.0, &queries.0, g))
        .py_err()
}

/// Mean recall@m for `m = 1..=m_max`.
#[pyfunction]
fn recall_at_m(
    codes_db: &PyBinaryCodes,
    codes_q: &PyBinaryCodes,
    truth: Vec<Vec<usize>>,
    m_max: usize,
) -> PyResult<Vec<f64>> {
    evaluation::recall_at_m(&codes_db.0, &codes_q.0, &truth, m_max)
        .py_err()
        .map(|c| c.recall_at_m)
}

type TimingCell = (String, usize, usize, Option<f64>);

/// `(method, d, k, ns_per_point)` for every cell; `ns_per_point` is None
/// when over the dense memory budget.
#[pyfunction]
#[pyo3(signature = (d_values, methods=vec!["full".to_string(), "bilinear".to_string(), "circulant".to_string(), "fjlt".to_string()], reps=5))]
fn timing_bench(
    py: Python<'_>,
    d_values: Vec<usize>,
    methods: Vec<String>,
    reps: usize,
) -> PyResult<Vec<TimingCell>> {
    let methods = methods
        .iter()
        .map(|m| m.parse::<TimingMethod>())
        .collect::<cbe_core::Result<Vec<_>>>()
        .py_err()?;
    let config = TimingConfig {
        reps,
        ..TimingConfig::default()
    };
    let recs = py
        .detach(|| evaluation::timing_bench(&d_values, &methods, &config))
        .py_err()?;
    Ok(recs
        .into_iter()
        .map(|r| (r.method.name().to_string(), r.d, r.k, r.ns_per_point))
        .collect())
}

/// Circulant binary embedding.
#[pymodule]
fn cbe(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDataMatrix>()?;
    m.add_class::<PyBinaryCodes>()?;
    m.add_class::<PyCirculantParams>()?;
    m.add_class::<PyEncoder>()?;
    m.add_class::<PyTrainResult>()?;
    m.add_class::<PyAngleStats>()?;
    for f in [
        wrap_pyfunction!(train, m)?,
        wrap_pyfunction!(solve_dc, m)?,
        wrap_pyfunction!(solve_pair, m)?,
        wrap_pyfunction!(fft, m)?,
        wrap_pyfunction!(ifft, m)?,
        wrap_pyfunction!(circulant_multiply, m)?,
        wrap_pyfunction!(fwht, m)?,
        wrap_pyfunction!(circular_shift, m)?,
        wrap_pyfunction!(synth_gaussian, m)?,
        wrap_pyfunction!(synth_clustered, m)?,
        wrap_pyfunction!(angle_experiment, m)?,
        wrap_pyfunction!(ground_truth_knn, m)?,
        wrap_pyfunction!(recall_at_m, m)?,
        wrap_pyfunction!(timing_bench, m)?,
    ] {
        m.add_function(f)?;
    }
    m.add("METHODS", Method::ALL.map(Method::name).to_vec())?;
    Ok(())
}
