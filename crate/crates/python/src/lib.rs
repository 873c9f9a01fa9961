//! Python bindings for `avkit`.

// pyo3 0.22 macro expansion trips this lint.
#![allow(clippy::useless_conversion)]

use std::path::PathBuf;

use avkit::config::RunConfig;
use avkit::corpus::{self, load_corpus};
use avkit::eval::{self, ContingencyTable};
use avkit::experiments::{self, resolve_disputed};
use avkit::features::FeatureExtractor;
use avkit::pipeline::PreparedCorpus;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

fn value_err(e: impl ToString) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: impl ToString) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

/// Round-trips a report through `json.loads` so Python gets plain dicts.
fn to_py<T: Serialize>(py: Python<'_>, value: &T) -> PyResult<PyObject> {
    let text = serde_json::to_string(value).map_err(runtime_err)?;
    Ok(py.import_bound("json")?.call_method1("loads", (text,))?.unbind())
}

/// Quote-stripped, lowercased, u/i-folded text.
#[pyfunction]
fn normalize(text: &str) -> PyResult<String> {
    corpus::normalize(text).map_err(value_err)
}

/// Token surfaces of already normalized text.
#[pyfunction]
fn tokenize(normalized: &str) -> Vec<String> {
    corpus::tokenize(normalized).into_iter().map(|t| t.surface).collect()
}

/// Normalizes and tokenizes `text`, then groups the tokens by sentence.
#[pyfunction]
fn sentences(text: &str) -> PyResult<Vec<Vec<String>>> {
    let tokens = corpus::tokenize(&corpus::normalize(text).map_err(value_err)?);
    Ok(corpus::split_sentences(&tokens)
        .into_iter()
        .map(|r| tokens[r].iter().map(|t| t.surface.clone()).collect())
        .collect())
}

#[pyfunction]
fn f1(tp: usize, fp: usize, fn_: usize) -> f64 {
    eval::f1(&ContingencyTable { tp, fp, fn_, tn: 0 })
}

/// Soft F1 over `(posterior, is_positive)` pairs.
#[pyfunction]
fn soft_f1(items: Vec<(f64, bool)>) -> PyResult<f64> {
    eval::soft_f1(items).map_err(value_err)
}

/// A loaded run configuration with its corpus tokenized and featurized.
#[pyclass]
struct Toolkit {
    config: RunConfig,
    prepared: PreparedCorpus,
}

#[pymethods]
impl Toolkit {
    #[new]
    #[pyo3(signature = (config_path, seed=None))]
    fn new(py: Python<'_>, config_path: PathBuf, seed: Option<u64>) -> PyResult<Self> {
        let mut config = RunConfig::load(&config_path).map_err(value_err)?;
        if let Some(s) = seed {
            config.seed = s;
        }
        let extractor = FeatureExtractor::new(config.pipeline.features.clone()).map_err(value_err)?;
        let min_tokens = config.pipeline.segmentation.min_tokens;
        let manifest = config.manifest.clone();
        let prepared = py.allow_threads(|| {
            let corpus = load_corpus(&manifest).map_err(|e| e.to_string())?;
            PreparedCorpus::new(corpus, &extractor, min_tokens).map_err(|e| e.to_string())
        });
        Ok(Toolkit {
            config,
            prepared: prepared.map_err(value_err)?,
        })
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.config.seed
    }

    #[getter]
    fn corpus_fingerprint(&self) -> String {
        self.prepared.corpus.fingerprint.clone()
    }

    /// `(id, author, title)` for every document.
    fn documents(&self) -> Vec<(String, String, String)> {
        self.prepared
            .corpus
            .documents
            .iter()
            .map(|d| (d.id.clone(), d.author.clone(), d.title.clone()))
            .collect()
    }

    fn loo(&self, py: Python<'_>) -> PyResult<PyObject> {
        let r = py.allow_threads(|| eval::loo_run(&self.prepared, &self.config.pipeline, self.config.seed));
        to_py(py, &r.map_err(runtime_err)?)
    }

    #[pyo3(signature = (replicas=None, disputed=None))]
    fn verify(&self, py: Python<'_>, replicas: Option<usize>, disputed: Option<String>) -> PyResult<PyObject> {
        let id = self.disputed(disputed)?;
        let n = replicas.unwrap_or(self.config.experiments.replicas);
        let v = py.allow_threads(|| {
            experiments::verify_disputed(&self.prepared, &id, &self.config.pipeline, n, self.config.seed)
        });
        to_py(py, &v.map_err(runtime_err)?)
    }

    #[pyo3(signature = (min_texts=None, disputed=None))]
    fn attribute(&self, py: Python<'_>, min_texts: Option<usize>, disputed: Option<String>) -> PyResult<PyObject> {
        let id = self.disputed(disputed)?;
        let m = min_texts.unwrap_or(self.config.experiments.min_texts);
        let r = py.allow_threads(|| {
            experiments::attribute_disputed(&self.prepared, &id, m, &self.config.pipeline, self.config.seed)
        });
        to_py(py, &r.map_err(runtime_err)?)
    }

    #[pyo3(signature = (top_k=None, disputed=None))]
    fn similar(&self, py: Python<'_>, top_k: Option<usize>, disputed: Option<String>) -> PyResult<PyObject> {
        let id = self.disputed(disputed)?;
        let k = top_k.unwrap_or(self.config.experiments.top_k);
        let r = py.allow_threads(|| experiments::rank_similar(&self.prepared, &id, k, &self.config.pipeline));
        to_py(py, &r.map_err(runtime_err)?)
    }

    fn ablate(&self, py: Python<'_>) -> PyResult<PyObject> {
        let x = &self.config.experiments;
        let pool = match &x.ablation_pool {
            Some(p) => p.iter().copied().collect(),
            None => self.config.pipeline.blocks().clone(),
        };
        let r = py.allow_threads(|| {
            experiments::ablate(&self.prepared, &self.config.pipeline, &pool, x.ablation_mode, self.config.seed)
        });
        to_py(py, &r.map_err(runtime_err)?)
    }
}

impl Toolkit {
    fn disputed(&self, id: Option<String>) -> PyResult<String> {
        let id = id.or_else(|| self.config.experiments.disputed_id.clone());
        resolve_disputed(&self.prepared.corpus, id.as_deref()).map_err(value_err)
    }
}

#[pymodule]
fn avkit_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", avkit::VERSION)?;
    m.add_function(wrap_pyfunction!(normalize, m)?)?;
    m.add_function(wrap_pyfunction!(tokenize, m)?)?;
    m.add_function(wrap_pyfunction!(sentences, m)?)?;
    m.add_function(wrap_pyfunction!(f1, m)?)?;
    m.add_function(wrap_pyfunction!(soft_f1, m)?)?;
    m.add_class::<Toolkit>()?;
    Ok(())
}
