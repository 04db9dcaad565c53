//! Python bindings. Built as the `grafite` extension module.

use grafite::workloads::{self, QueryWorkload};
use grafite::{Epsilon, GrafiteBuilder, FULL_UNIVERSE};
use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyBytes;

fn to_py(e: grafite::Error) -> PyErr {
    match e {
        grafite::Error::Io(io) => PyOSError::new_err(io.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn sorted(mut keys: Vec<u64>) -> Vec<u64> {
    keys.sort_unstable();
    keys.dedup();
    keys
}

/// Range filter with a false-positive bound of `range_size · ε / max_range`.
#[pyclass(name = "GrafiteFilter", module = "grafite", frozen)]
struct PyGrafite(grafite::GrafiteFilter);

#[pymethods]
impl PyGrafite {
    #[new]
    #[pyo3(signature = (keys, max_range, epsilon, seed = 0, universe = FULL_UNIVERSE))]
    fn new(
        keys: Vec<u64>,
        max_range: u64,
        epsilon: f64,
        seed: u64,
        universe: u128,
    ) -> PyResult<Self> {
        let eps = Epsilon::from_f64(epsilon).map_err(to_py)?;
        GrafiteBuilder::new(max_range, eps)
            .seed(seed)
            .universe(universe)
            .build(&keys)
            .map(Self)
            .map_err(to_py)
    }

    /// Builds with `bits_per_key` bits of space per key.
    #[staticmethod]
    #[pyo3(signature = (keys, bits_per_key, range_hint = None, seed = 0, universe = FULL_UNIVERSE))]
    fn with_budget(
        keys: Vec<u64>,
        bits_per_key: u32,
        range_hint: Option<u64>,
        seed: u64,
        universe: u128,
    ) -> PyResult<Self> {
        GrafiteBuilder::with_budget(bits_per_key, range_hint)
            .seed(seed)
            .universe(universe)
            .build(&keys)
            .map(Self)
            .map_err(to_py)
    }

    /// True unless `[a, b]` is certainly empty.
    fn query(&self, a: u64, b: u64) -> PyResult<bool> {
        self.0.query(a, b).map(|ans| !ans.is_empty()).map_err(to_py)
    }

    fn approx_count(&self, a: u64, b: u64) -> PyResult<u64> {
        self.0.approx_count(a, b).map_err(to_py)
    }

    #[getter]
    fn reduced_universe(&self) -> u128 {
        self.0.reduced_universe()
    }

    #[getter]
    fn universe(&self) -> u128 {
        self.0.universe()
    }

    #[getter]
    fn max_range(&self) -> u64 {
        self.0.max_range()
    }

    #[getter]
    fn epsilon(&self) -> f64 {
        self.0.epsilon().as_f64()
    }

    fn codes(&self) -> Vec<u64> {
        self.0.codes().iter().collect()
    }

    fn size_in_bits(&self) -> u64 {
        self.0.size_in_bits()
    }

    fn bits_per_key(&self) -> f64 {
        self.0.bits_per_key()
    }

    fn __len__(&self) -> usize {
        self.0.key_count() as usize
    }

    fn to_bytes<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, &self.0.to_bytes())
    }

    #[staticmethod]
    fn from_bytes(data: &[u8]) -> PyResult<Self> {
        grafite::GrafiteFilter::from_bytes(data)
            .map(Self)
            .map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!(
            "GrafiteFilter(n={}, r={}, bits_per_key={:.3})",
            self.0.key_count(),
            self.0.reduced_universe(),
            self.0.bits_per_key()
        )
    }
}

/// Keeps the occupied buckets of width `bucket_width`.
#[pyclass(name = "BucketingFilter", module = "grafite", frozen)]
struct PyBucketing(grafite::BucketingFilter);

#[pymethods]
impl PyBucketing {
    #[new]
    #[pyo3(signature = (keys, bucket_width, universe = FULL_UNIVERSE))]
    fn new(keys: Vec<u64>, bucket_width: u128, universe: u128) -> PyResult<Self> {
        grafite::BucketingFilter::build(&keys, bucket_width, universe)
            .map(Self)
            .map_err(to_py)
    }

    #[staticmethod]
    #[pyo3(signature = (keys, bits_per_key, universe = FULL_UNIVERSE))]
    fn with_budget(keys: Vec<u64>, bits_per_key: f64, universe: u128) -> PyResult<Self> {
        grafite::BucketingFilter::build_with_budget(&keys, bits_per_key, universe)
            .map(Self)
            .map_err(to_py)
    }

    fn query(&self, a: u64, b: u64) -> PyResult<bool> {
        self.0.query(a, b).map(|ans| !ans.is_empty()).map_err(to_py)
    }

    #[getter]
    fn bucket_width(&self) -> u128 {
        self.0.bucket_width()
    }

    #[getter]
    fn universe(&self) -> u128 {
        self.0.universe()
    }

    fn buckets(&self) -> Vec<u64> {
        self.0.buckets().iter().collect()
    }

    fn size_in_bits(&self) -> u64 {
        self.0.size_in_bits()
    }

    fn bits_per_key(&self) -> f64 {
        self.0.bits_per_key()
    }

    fn __len__(&self) -> usize {
        self.0.key_count() as usize
    }

    fn to_bytes<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, &self.0.to_bytes())
    }

    #[staticmethod]
    fn from_bytes(data: &[u8]) -> PyResult<Self> {
        grafite::BucketingFilter::from_bytes(data)
            .map(Self)
            .map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!(
            "BucketingFilter(n={}, bucket_width={}, bits_per_key={:.3})",
            self.0.key_count(),
            self.0.bucket_width(),
            self.0.bits_per_key()
        )
    }
}

/// Elias-Fano sequence. `access`, `select0` and `select1` are 1-based.
#[pyclass(name = "EliasFano", module = "grafite", frozen)]
struct PyEliasFano(grafite::EliasFano);

#[pymethods]
impl PyEliasFano {
    #[new]
    fn new(values: Vec<u64>, bound: u128) -> PyResult<Self> {
        grafite::EliasFano::build(&values, bound)
            .map(Self)
            .map_err(to_py)
    }

    fn access(&self, i: usize) -> PyResult<u64> {
        self.0.access(i).map_err(to_py)
    }

    fn select0(&self, k: usize) -> PyResult<usize> {
        self.0.select0(k).map_err(to_py)
    }

    fn select1(&self, k: usize) -> PyResult<usize> {
        self.0.select1(k).map_err(to_py)
    }

    fn predecessor(&self, y: u64) -> Option<u64> {
        self.0.predecessor(y)
    }

    fn rank(&self, y: u64) -> usize {
        self.0.rank(y)
    }

    #[getter]
    fn low_bits(&self) -> u32 {
        self.0.low_bits()
    }

    #[getter]
    fn bound(&self) -> u128 {
        self.0.bound()
    }

    /// The high-bits array as a list of booleans.
    fn high_bits(&self) -> Vec<bool> {
        (1..=self.0.high_len())
            .map(|p| self.0.high_bit(p).unwrap_or(false))
            .collect()
    }

    fn size_in_bits(&self) -> u64 {
        self.0.size_in_bits()
    }

    fn to_list(&self) -> Vec<u64> {
        self.0.iter().collect()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn to_bytes<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, &self.0.to_bytes())
    }

    #[staticmethod]
    fn from_bytes(data: &[u8]) -> PyResult<Self> {
        grafite::EliasFano::from_bytes(data)
            .map(Self)
            .map_err(to_py)
    }
}

fn ranges(w: QueryWorkload) -> Vec<(u64, u64)> {
    w.ranges
}

#[pyfunction]
#[pyo3(signature = (n, seed, universe = FULL_UNIVERSE))]
fn uniform_keys(n: usize, seed: u64, universe: u128) -> PyResult<Vec<u64>> {
    workloads::gen_uniform_keys(n, universe, seed).map_err(to_py)
}

/// Uniform query ranges; with `keys`, ranges holding a key are replaced.
#[pyfunction]
#[pyo3(signature = (n_queries, range_size, seed, universe = FULL_UNIVERSE, keys = None))]
fn uncorrelated_queries(
    n_queries: usize,
    range_size: u64,
    seed: u64,
    universe: u128,
    keys: Option<Vec<u64>>,
) -> PyResult<Vec<(u64, u64)>> {
    let w = workloads::gen_uncorrelated_queries(n_queries, range_size, universe, seed)
        .map_err(to_py)?;
    match keys {
        Some(keys) => workloads::enforce_empty(&w, &sorted(keys))
            .map(ranges)
            .map_err(to_py),
        None => Ok(ranges(w)),
    }
}

/// Empty query ranges placed near keys with correlation `degree` in [0, 1].
#[pyfunction]
#[pyo3(signature = (keys, n_queries, range_size, degree, seed, universe = FULL_UNIVERSE))]
fn correlated_queries(
    keys: Vec<u64>,
    n_queries: usize,
    range_size: u64,
    degree: f64,
    seed: u64,
    universe: u128,
) -> PyResult<Vec<(u64, u64)>> {
    let keys = sorted(keys);
    let w = workloads::gen_correlated_queries(&keys, n_queries, range_size, degree, universe, seed)
        .map_err(to_py)?;
    workloads::enforce_empty(&w, &keys)
        .map(ranges)
        .map_err(to_py)
}

/// Query ranges that each contain at least one key.
#[pyfunction]
#[pyo3(signature = (keys, n_queries, range_size, seed, universe = FULL_UNIVERSE))]
fn true_queries(
    keys: Vec<u64>,
    n_queries: usize,
    range_size: u64,
    seed: u64,
    universe: u128,
) -> PyResult<Vec<(u64, u64)>> {
    workloads::gen_true_queries(&sorted(keys), n_queries, range_size, universe, seed)
        .map(ranges)
        .map_err(to_py)
}

#[pyfunction]
fn load_keys(path: std::path::PathBuf) -> PyResult<Vec<u64>> {
    workloads::load_binary_dataset(path).map_err(to_py)
}

#[pyfunction]
fn save_keys(path: std::path::PathBuf, keys: Vec<u64>) -> PyResult<()> {
    workloads::write_binary_dataset(path, &keys).map_err(to_py)
}

#[pymodule]
#[pyo3(name = "grafite")]
fn grafite_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGrafite>()?;
    m.add_class::<PyBucketing>()?;
    m.add_class::<PyEliasFano>()?;
    m.add_function(wrap_pyfunction!(uniform_keys, m)?)?;
    m.add_function(wrap_pyfunction!(uncorrelated_queries, m)?)?;
    m.add_function(wrap_pyfunction!(correlated_queries, m)?)?;
    m.add_function(wrap_pyfunction!(true_queries, m)?)?;
    m.add_function(wrap_pyfunction!(load_keys, m)?)?;
    m.add_function(wrap_pyfunction!(save_keys, m)?)?;
    m.add("FULL_UNIVERSE", FULL_UNIVERSE)?;
    Ok(())
}
