//! Python module `bdci`: R-D curves, classical BD, model bundles and BDCI.

use std::path::PathBuf;

use bdci_core::bdci::{compute_bdci, train_bundle, BdciResult, DEFAULT_DENSE_THRESHOLD};
use bdci_core::classic::compute_bd;
use bdci_core::io::{format_rd_text, parse_rd_text};
use bdci_core::nn::{ModelBundle, TrainConfig};
use bdci_core::rd::{validate_samples, BdValue};
use bdci_core::synth::{build_corpus, Corpus, CorpusConfig, Split};
use bdci_core::{Method, Mode, RdCurveSamples};
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyBytes, PyDict};

create_exception!(bdci, BdciError, PyException, "Raised for every library error; the message starts with the error kind.");

fn err(e: bdci_core::Error) -> PyErr {
    BdciError::new_err(format!("{}: {e}", e.kind()))
}

fn parse_mode(s: &str) -> PyResult<Mode> {
    s.parse().map_err(PyValueError::new_err)
}

fn parse_method(s: &str) -> PyResult<Method> {
    match s.parse() {
        Ok(m) if Method::CLASSICAL.contains(&m) => Ok(m),
        Ok(m) => Err(PyValueError::new_err(format!("'{m}' is not a classical method"))),
        Err(e) => Err(PyValueError::new_err(e)),
    }
}

/// Validated rate-distortion samples of one codec on one content item.
#[pyclass(name = "RdCurve", module = "bdci", frozen)]
struct PyRdCurve {
    inner: RdCurveSamples,
}

#[pymethods]
impl PyRdCurve {
    #[new]
    #[pyo3(signature = (points, metric = "quality", label = ""))]
    fn new(points: Vec<(f64, f64)>, metric: &str, label: &str) -> PyResult<Self> {
        Ok(Self { inner: validate_samples(&points, metric, label).map_err(err)? })
    }

    /// Parses the `rate,quality` text format.
    #[staticmethod]
    #[pyo3(signature = (text, label = ""))]
    fn parse(text: &str, label: &str) -> PyResult<Self> {
        Ok(Self { inner: parse_rd_text(text, label).map_err(err)? })
    }

    fn to_text(&self) -> String {
        format_rd_text(&self.inner)
    }

    #[getter]
    fn rates(&self) -> Vec<f64> {
        self.inner.rates()
    }

    #[getter]
    fn qualities(&self) -> Vec<f64> {
        self.inner.qualities()
    }

    #[getter]
    fn metric(&self) -> &str {
        self.inner.metric_name()
    }

    fn scale_rates(&self, factor: f64) -> PyResult<Self> {
        Ok(Self { inner: self.inner.scale_rates(factor).map_err(err)? })
    }

    fn shift_quality(&self, offset: f64) -> PyResult<Self> {
        Ok(Self { inner: self.inner.shift_quality(offset).map_err(err)? })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("RdCurve({} points, metric={:?})", self.inner.len(), self.inner.metric_name())
    }
}

fn bd_dict<'py>(py: Python<'py>, bd: &BdValue) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("mode", bd.mode.as_str())?;
    d.set_item("method", bd.method.as_str())?;
    d.set_item("delta", bd.delta)?;
    d.set_item("delta_rate_percent", bd.delta_rate_percent)?;
    d.set_item("interval", (bd.interval.lo, bd.interval.hi))?;
    Ok(d)
}

fn bdci_dict<'py>(py: Python<'py>, r: &BdciResult) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("mode", r.mode.as_str())?;
    d.set_item("mean_delta", r.mean_delta)?;
    d.set_item("sigma_delta", r.sigma_delta)?;
    d.set_item("interval_delta", (r.interval_delta[0], r.interval_delta[1]))?;
    d.set_item("mean_rate_percent", r.mean_rate_percent)?;
    d.set_item("interval_rate_percent", r.interval_rate_percent.map(|[lo, hi]| (lo, hi)))?;
    d.set_item("interval", (r.interval.lo, r.interval.hi))?;
    d.set_item("degenerate_fallback", r.degenerate_fallback)?;
    d.set_item("anchor_exact", r.anchor.exact)?;
    d.set_item("target_exact", r.target.exact)?;
    Ok(d)
}

/// Classical BD of `target` against `anchor`. `mode` is "br" or "quality";
/// `method` one of "cubic", "csi", "pchip", "akima".
#[pyfunction]
#[pyo3(signature = (anchor, target, mode = "br", method = "pchip"))]
fn bd<'py>(py: Python<'py>, anchor: &PyRdCurve, target: &PyRdCurve, mode: &str, method: &str) -> PyResult<Bound<'py, PyDict>> {
    let v = compute_bd(&anchor.inner, &target.inner, parse_mode(mode)?, parse_method(method)?).map_err(err)?;
    bd_dict(py, &v)
}

/// The seven category networks plus metadata.
#[pyclass(name = "ModelBundle", module = "bdci", frozen)]
struct PyBundle {
    inner: ModelBundle,
}

#[pymethods]
impl PyBundle {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let bytes = std::fs::read(&path).map_err(|e| err(e.into()))?;
        Self::from_bytes(&bytes)
    }

    #[staticmethod]
    fn from_bytes(data: &[u8]) -> PyResult<Self> {
        Ok(Self { inner: ModelBundle::from_bytes(data).map_err(err)? })
    }

    fn to_bytes<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, &self.inner.to_bytes())
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        std::fs::write(path, self.inner.to_bytes()).map_err(|e| err(e.into()))
    }

    /// Hex SHA-256 of the serialized bundle.
    #[getter]
    fn digest(&self) -> String {
        self.inner.digest()
    }

    /// BD estimate with its 3σ interval.
    #[pyo3(signature = (anchor, target, mode = "br", dense_threshold = DEFAULT_DENSE_THRESHOLD))]
    fn bdci<'py>(&self, py: Python<'py>, anchor: &PyRdCurve, target: &PyRdCurve, mode: &str, dense_threshold: usize) -> PyResult<Bound<'py, PyDict>> {
        let r = compute_bdci(&anchor.inner, &target.inner, parse_mode(mode)?, &self.inner, dense_threshold).map_err(err)?;
        bdci_dict(py, &r)
    }
}

/// Writes a synthetic corpus to `out_dir`; returns the number of records.
#[pyfunction]
#[pyo3(signature = (out_dir, curves, seed = 0, split = "train", samplings = 4))]
fn generate_corpus(out_dir: PathBuf, curves: usize, seed: u64, split: &str, samplings: usize) -> PyResult<usize> {
    let split: Split = split.parse().map_err(PyValueError::new_err)?;
    let cfg = CorpusConfig { pairs: curves, seed, split, samplings_per_curve: samplings, ..Default::default() };
    let corpus = build_corpus(&cfg).map_err(err)?;
    corpus.write_dir(&out_dir).map_err(err)?;
    Ok(corpus.records.len())
}

/// Trains a bundle on the corpus in `corpus_dir`.
#[pyfunction]
#[pyo3(signature = (corpus_dir, seed = 0, epochs = None))]
fn train(corpus_dir: PathBuf, seed: u64, epochs: Option<usize>) -> PyResult<PyBundle> {
    let corpus = Corpus::read_dir(&corpus_dir).map_err(err)?;
    let d = TrainConfig::default();
    let config = TrainConfig { seed, max_epochs: epochs.unwrap_or(d.max_epochs), ..d };
    let (bundle, _) = train_bundle(&corpus.records, &config, &corpus.hash()).map_err(err)?;
    Ok(PyBundle { inner: bundle })
}

#[pymodule]
#[pyo3(name = "bdci")]
fn bdci_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", bdci_core::VERSION)?;
    m.add("BdciError", m.py().get_type::<BdciError>())?;
    m.add_class::<PyRdCurve>()?;
    m.add_class::<PyBundle>()?;
    m.add_function(wrap_pyfunction!(bd, m)?)?;
    m.add_function(wrap_pyfunction!(generate_corpus, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    Ok(())
}
