//! Python bindings. Structured arguments are plain Python values (lists,
//! dicts) in the same shapes as the JSON documents the CLI reads; results
//! come back as dicts in the shapes the CLI reports.

use blockassoc::checkers::{gaussian_block_association, id_sufficient_conditions};
use blockassoc::limits::longrun_covariance;
use blockassoc::mctest::{
    exact_discrete_association, exact_discrete_block_association, mc_test_batch, McConfig, OracleBudget, TestMode,
};
use blockassoc::simulate::{MaModel, SourceSpec};
use blockassoc::{BlockPartition, CovarianceMatrix, DiscreteJointDistribution, IdTriplet, SeedLineage};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use serde::de::DeserializeOwned;
use serde::Serialize;

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn from_py<T: DeserializeOwned>(obj: &Bound<'_, PyAny>) -> PyResult<T> {
    let text: String = obj.py().import("json")?.call_method1("dumps", (obj,))?.extract()?;
    serde_json::from_str(&text).map_err(err)
}

fn to_py<T: Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(err)?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

/// `None` means singleton blocks.
fn blocks_or_singletons(blocks: Option<&Bound<'_, PyAny>>, dim: usize) -> PyResult<BlockPartition> {
    let p = match blocks {
        Some(b) => from_py::<BlockPartition>(b)?,
        None => BlockPartition::singletons(dim),
    };
    if p.index_count() != dim {
        return Err(err(format!("blocks cover {} indices, expected {dim}", p.index_count())));
    }
    Ok(p)
}

/// A preset name or a source document.
fn source_spec(source: &Bound<'_, PyAny>) -> PyResult<SourceSpec> {
    if let Ok(name) = source.extract::<String>() {
        return SourceSpec::preset(&name).ok_or_else(|| err(format!("unknown preset {name:?}")));
    }
    from_py(source)
}

#[pyfunction]
fn version() -> &'static str {
    blockassoc::VERSION
}

/// Gaussian verdict for a covariance matrix (rows) and 1-based blocks.
#[pyfunction]
#[pyo3(signature = (sigma, blocks=None))]
fn check_gaussian(py: Python<'_>, sigma: &Bound<'_, PyAny>, blocks: Option<&Bound<'_, PyAny>>) -> PyResult<Py<PyAny>> {
    let sigma: CovarianceMatrix = from_py(sigma)?;
    let p = blocks_or_singletons(blocks, sigma.dim())?;
    to_py(py, &gaussian_block_association(&sigma, &p).map_err(err)?)
}

/// Sufficient conditions for an infinitely divisible triplet.
#[pyfunction]
#[pyo3(signature = (triplet, blocks=None))]
fn check_id(py: Python<'_>, triplet: &Bound<'_, PyAny>, blocks: Option<&Bound<'_, PyAny>>) -> PyResult<Py<PyAny>> {
    let t: IdTriplet = from_py(triplet)?;
    let p = blocks_or_singletons(blocks, t.dim())?;
    to_py(py, &id_sufficient_conditions(&t, &p).map_err(err)?)
}

/// Whether `x` lies in the closed orthants or in a single block's span.
#[pyfunction]
fn membership_s(x: Vec<f64>, blocks: &Bound<'_, PyAny>) -> PyResult<bool> {
    let p = blocks_or_singletons(Some(blocks), x.len())?;
    blockassoc::membership_s(&x, &p).map_err(err)
}

/// Exact association of a finite law; between blocks when `blocks` is given.
#[pyfunction]
#[pyo3(signature = (dist, blocks=None))]
fn exact_oracle(py: Python<'_>, dist: &Bound<'_, PyAny>, blocks: Option<&Bound<'_, PyAny>>) -> PyResult<Py<PyAny>> {
    let dist: DiscreteJointDistribution = from_py(dist)?;
    let budget = OracleBudget::default();
    let outcome = match blocks {
        Some(b) => {
            let p = blocks_or_singletons(Some(b), dist.dim())?;
            exact_discrete_block_association(&dist, &p, &budget)
        }
        None => exact_discrete_association(&dist, &budget),
    }
    .map_err(err)?;
    to_py(py, &outcome)
}

/// Monte Carlo falsification test; `mode` is "block", "weak" or "negative".
#[pyfunction]
#[pyo3(signature = (source, blocks=None, samples=100_000, pairs=200, alpha=0.01, seed=42, mode="block"))]
#[allow(clippy::too_many_arguments)]
fn mc_test(
    py: Python<'_>,
    source: &Bound<'_, PyAny>,
    blocks: Option<&Bound<'_, PyAny>>,
    samples: usize,
    pairs: usize,
    alpha: f64,
    seed: u64,
    mode: &str,
) -> PyResult<Py<PyAny>> {
    let mode = match mode {
        "block" => TestMode::Block,
        "weak" => TestMode::Weak,
        "negative" => TestMode::Negative,
        other => return Err(err(format!("unknown mode {other:?}"))),
    };
    let spec = source_spec(source)?;
    let sampler = spec.build().map_err(err)?;
    let p = blocks_or_singletons(blocks, sampler.dim())?;
    let cfg = McConfig {
        samples,
        pairs,
        significance: alpha,
        seed,
        ..McConfig::default()
    };
    cfg.validate().map_err(err)?;
    // the GIL is not needed while sampling and testing
    let verdict = py
        .detach(|| {
            let batch = sampler.sample(cfg.samples, cfg.batch_lineage())?;
            mc_test_batch(&batch, &p, &cfg, mode, sampler.finite_second_moments())
        })
        .map_err(err)?;
    to_py(py, &verdict)
}

/// `n` rows drawn from a source under `seed`, as a list of lists.
#[pyfunction]
#[pyo3(signature = (source, n, seed=42))]
fn sample(source: &Bound<'_, PyAny>, n: usize, seed: u64) -> PyResult<Vec<Vec<f64>>> {
    let sampler = source_spec(source)?.build().map_err(err)?;
    let batch = sampler.sample(n, SeedLineage::new(seed).derive("simulate", 0)).map_err(err)?;
    Ok(batch.rows().map(<[f64]>::to_vec).collect())
}

/// Long-run covariance of an MA model document.
#[pyfunction]
fn longrun(py: Python<'_>, model: &Bound<'_, PyAny>) -> PyResult<Py<PyAny>> {
    let model: MaModel = from_py(model)?;
    to_py(py, &longrun_covariance(&model).map_err(err)?)
}

#[pymodule]
fn pyblockassoc(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(version, m)?)?;
    m.add_function(wrap_pyfunction!(check_gaussian, m)?)?;
    m.add_function(wrap_pyfunction!(check_id, m)?)?;
    m.add_function(wrap_pyfunction!(membership_s, m)?)?;
    m.add_function(wrap_pyfunction!(exact_oracle, m)?)?;
    m.add_function(wrap_pyfunction!(mc_test, m)?)?;
    m.add_function(wrap_pyfunction!(sample, m)?)?;
    m.add_function(wrap_pyfunction!(longrun, m)?)?;
    Ok(())
}
