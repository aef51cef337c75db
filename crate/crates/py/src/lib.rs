//! Python bindings for `dirng-core`.
//!
//! Structured results (bounds, extractor parameters) are returned as plain
//! dictionaries; bit strings travel as `(bytes, bit_length)` pairs, most
//! significant bit first.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyBytes;

use dirng_core::bits::BitString;
use dirng_core::eatbound::{self, EATParams};
use dirng_core::qsim::{self, Setting};
use dirng_core::seedsource::{self, BitStream};
use dirng_core::tradeoff::{self, BlockParams, TradeoffParams};
use dirng_core::trevisan::{self, DesignKind};
use dirng_core::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io { .. } | Error::Unavailable(_) | Error::Session(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn to_py<'py>(py: Python<'py>, value: &impl serde::Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn bits_from(data: &[u8], nbits: Option<usize>) -> PyResult<BitString> {
    BitString::from_bytes(data.to_vec(), nbits.unwrap_or(data.len() * 8)).map_err(py_err)
}

fn setting(x: u8) -> PyResult<Setting> {
    Setting::new(x).map_err(py_err)
}

/// Instrumental value of the canonical strategy on the noisy singlet.
#[pyfunction]
fn instrumental_value(v: f64) -> PyResult<f64> {
    let dist = qsim::born_probabilities(&qsim::noisy_singlet(v).map_err(py_err)?, &qsim::canonical_strategy())
        .map_err(py_err)?;
    Ok(qsim::instrumental_value(&dist))
}

/// `p[x-1][a][b]` for the canonical strategy on the noisy singlet.
#[pyfunction]
fn born_probabilities(v: f64) -> PyResult<[[[f64; 2]; 2]; 3]> {
    let dist = qsim::born_probabilities(&qsim::noisy_singlet(v).map_err(py_err)?, &qsim::canonical_strategy())
        .map_err(py_err)?;
    Ok(*dist.table())
}

/// `(value, [(alice_outputs, bob_outputs), ...])` over deterministic strategies.
#[pyfunction]
fn classical_max() -> (f64, Vec<(Vec<u32>, Vec<u32>)>) {
    let cm = qsim::classical_max();
    let as_list = |bits: &[u8]| bits.iter().map(|&b| u32::from(b)).collect();
    (cm.value, cm.maximizers.iter().map(|s| (as_list(&s.alice), as_list(&s.bob))).collect())
}

/// Lowered per-setting min-entropy fit at violation `i`.
#[pyfunction]
#[pyo3(signature = (i, x, lowered = true))]
fn f_x(i: f64, x: u8, lowered: bool) -> PyResult<f64> {
    let tp = if lowered { TradeoffParams::default() } else { TradeoffParams::unlowered() };
    tradeoff::f_x(i, setting(x)?, &tp).map_err(py_err)
}

#[pyclass(name = "EatParams", from_py_object)]
#[derive(Clone)]
struct PyEatParams {
    inner: EATParams,
}

#[pymethods]
impl PyEatParams {
    #[new]
    #[pyo3(signature = (n, eps, eps_ea, delta_prime, i_exp, gamma = 1.0, s_max = 1, eval_margin = 1.0))]
    #[allow(clippy::too_many_arguments)]
    fn new(n: u64, eps: f64, eps_ea: f64, delta_prime: f64, i_exp: f64, gamma: f64, s_max: u32, eval_margin: f64) -> PyResult<Self> {
        let inner = EATParams {
            n,
            eps,
            eps_ea,
            delta_prime,
            i_exp,
            eval_margin,
            block: BlockParams { gamma, s_max },
            tradeoff: TradeoffParams::default(),
        };
        inner.validate().map_err(py_err)?;
        Ok(PyEatParams { inner })
    }

    /// Parameters of the reported photonic session.
    #[staticmethod]
    fn reported_session() -> Self {
        PyEatParams { inner: EATParams::reported_session() }
    }

    #[getter]
    fn n(&self) -> u64 {
        self.inner.n
    }

    /// Optimised bound as a dict.
    fn eta_opt<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &eatbound::eta_opt(&self.inner).map_err(py_err)?)
    }

    fn soundness(&self, m: u64, eps_ext: f64) -> f64 {
        eatbound::soundness(&self.inner, m, eps_ext)
    }

    fn completeness(&self) -> f64 {
        eatbound::completeness(self.inner.n, self.inner.delta_prime)
    }

    fn randomness_gain(&self, m: u64) -> f64 {
        eatbound::randomness_gain(&self.inner, m)
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

fn design_kind(name: &str) -> PyResult<DesignKind> {
    name.parse().map_err(py_err)
}

/// Extractor parameters as a dict.
#[pyfunction]
#[pyo3(signature = (n_in, k, eps_ext, design = "block"))]
fn compute_params<'py>(py: Python<'py>, n_in: u64, k: f64, eps_ext: f64, design: &str) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &trevisan::compute_params(n_in, k, eps_ext, design_kind(design)?).map_err(py_err)?)
}

/// Trevisan extraction; returns `(bytes, bit_length)`.
#[pyfunction]
#[pyo3(signature = (source, seed, k, eps_ext, design = "block", source_bits = None, seed_bits = None))]
#[allow(clippy::too_many_arguments)]
fn extract<'py>(
    py: Python<'py>,
    source: &[u8],
    seed: &[u8],
    k: f64,
    eps_ext: f64,
    design: &str,
    source_bits: Option<usize>,
    seed_bits: Option<usize>,
) -> PyResult<(Bound<'py, PyBytes>, usize)> {
    let source = bits_from(source, source_bits)?;
    let seed = bits_from(seed, seed_bits)?;
    let params = trevisan::compute_params(source.len() as u64, k, eps_ext, design_kind(design)?).map_err(py_err)?;
    let out = py.detach(|| trevisan::extract(&source, &seed, &params)).map_err(py_err)?;
    Ok((PyBytes::new(py, out.as_bytes()), out.len()))
}

/// `count` trits in `{1, 2, 3}` from the given bits by two-bit rejection.
#[pyfunction]
#[pyo3(signature = (data, count, nbits = None))]
fn bits_to_trits(data: &[u8], count: usize, nbits: Option<usize>) -> PyResult<Vec<u32>> {
    let mut s = BitStream::from_bits(bits_from(data, nbits)?);
    let trits = seedsource::bits_to_trits(&mut s, count).map_err(py_err)?;
    Ok(trits.into_iter().map(u32::from).collect())
}

#[pyfunction]
fn completeness(n: u64, delta_prime: f64) -> f64 {
    eatbound::completeness(n, delta_prime)
}

#[pymodule]
fn dirng(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("QUANTUM_MAX", dirng_core::QUANTUM_MAX)?;
    m.add("CLASSICAL_BOUND", dirng_core::CLASSICAL_BOUND)?;
    m.add_class::<PyEatParams>()?;
    m.add_function(wrap_pyfunction!(instrumental_value, m)?)?;
    m.add_function(wrap_pyfunction!(born_probabilities, m)?)?;
    m.add_function(wrap_pyfunction!(classical_max, m)?)?;
    m.add_function(wrap_pyfunction!(f_x, m)?)?;
    m.add_function(wrap_pyfunction!(compute_params, m)?)?;
    m.add_function(wrap_pyfunction!(extract, m)?)?;
    m.add_function(wrap_pyfunction!(bits_to_trits, m)?)?;
    m.add_function(wrap_pyfunction!(completeness, m)?)?;
    Ok(())
}
