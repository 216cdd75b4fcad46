//! Python bindings: `import aoi_harq_py`.
//!
//! Configurations are built once (`HarqConfig`, `DelayProfile`) and passed
//! to the free functions. Protocols are the strings "reactive" and
//! "proactive". Library errors surface as `aoi_harq_py.AoiError`, a
//! `ValueError` subclass.

use std::collections::HashMap;

use aoi_harq::analytics::{self, CaseReduction, FixedIncrement, DEFAULT_ROUND_CAP};
use aoi_harq::optimize::{self as opt, SearchMethod, SearchSpace};
use aoi_harq::{fbl, sim, BlockAssignment, ErrorVector, ProtocolKind};
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

create_exception!(aoi_harq_py, AoiError, PyValueError);

fn err(e: aoi_harq::Error) -> PyErr {
    AoiError::new_err(e.to_string())
}

fn kind(protocol: &str) -> PyResult<ProtocolKind> {
    protocol
        .parse()
        .map_err(|e: String| PyValueError::new_err(e))
}

/// Coding, propagation, decoding and feedback delays in channel uses.
#[pyclass(frozen, eq, get_all, from_py_object)]
#[derive(Clone, PartialEq)]
struct DelayProfile {
    tau_c: u64,
    tau_p: u64,
    tau_d: u64,
    tau_f: u64,
}

#[pymethods]
impl DelayProfile {
    #[new]
    #[pyo3(signature = (tau_c=0, tau_p=0, tau_d=0, tau_f=0))]
    fn new(tau_c: u64, tau_p: u64, tau_d: u64, tau_f: u64) -> Self {
        Self {
            tau_c,
            tau_p,
            tau_d,
            tau_f,
        }
    }

    /// Per-round overhead tau_d + tau_f + tau_p.
    #[getter]
    fn round_trip(&self) -> u64 {
        self.inner().script_t()
    }

    fn __repr__(&self) -> String {
        format!(
            "DelayProfile(tau_c={}, tau_p={}, tau_d={}, tau_f={})",
            self.tau_c, self.tau_p, self.tau_d, self.tau_f
        )
    }
}

impl DelayProfile {
    fn inner(&self) -> aoi_harq::DelayProfile {
        aoi_harq::DelayProfile::new(self.tau_c, self.tau_p, self.tau_d, self.tau_f)
    }
}

fn delays_or_zero(d: Option<DelayProfile>) -> aoi_harq::DelayProfile {
    d.map_or(aoi_harq::DelayProfile::ZERO, |d| d.inner())
}

/// Validated block assignment, error vector and delays.
#[pyclass(frozen, from_py_object)]
#[derive(Clone)]
struct HarqConfig(aoi_harq::HarqConfig);

#[pymethods]
impl HarqConfig {
    #[new]
    #[pyo3(signature = (n, e, delays=None))]
    fn new(n: Vec<u64>, e: Vec<f64>, delays: Option<DelayProfile>) -> PyResult<Self> {
        aoi_harq::HarqConfig::from_parts(n, e, delays_or_zero(delays))
            .map(Self)
            .map_err(err)
    }

    /// Error vector from the finite-blocklength model at linear SNR `gamma`.
    #[staticmethod]
    #[pyo3(signature = (n, gamma, k, delays=None))]
    fn from_channel(
        n: Vec<u64>,
        gamma: f64,
        k: u64,
        delays: Option<DelayProfile>,
    ) -> PyResult<Self> {
        let spec = aoi_harq::ChannelSpec::new(gamma, k).map_err(err)?;
        let n = BlockAssignment::new(n).map_err(err)?;
        let e = fbl::error_vector(&spec, &n).map_err(err)?;
        aoi_harq::validate_config(n, e, delays_or_zero(delays))
            .map(Self)
            .map_err(err)
    }

    #[getter]
    fn n(&self) -> Vec<u64> {
        self.0.n().lengths().to_vec()
    }

    #[getter]
    fn e(&self) -> Vec<f64> {
        self.0.e().values().to_vec()
    }

    #[getter]
    fn delays(&self) -> DelayProfile {
        let d = self.0.delays();
        DelayProfile::new(d.tau_c, d.tau_p, d.tau_d, d.tau_f)
    }

    #[getter]
    fn m(&self) -> usize {
        self.0.m()
    }

    fn __repr__(&self) -> String {
        format!(
            "HarqConfig(n={:?}, e={:?}, delays={})",
            self.n(),
            self.e(),
            self.delays().__repr__()
        )
    }
}

/// Average AoI and average peak AoI, with how they were obtained.
#[pyclass(frozen, get_all)]
struct AoiResult {
    avg_aoi: f64,
    avg_peak_aoi: f64,
    provenance: &'static str,
}

#[pymethods]
impl AoiResult {
    fn __repr__(&self) -> String {
        format!(
            "AoiResult(avg_aoi={}, avg_peak_aoi={}, provenance='{}')",
            self.avg_aoi, self.avg_peak_aoi, self.provenance
        )
    }
}

impl From<aoi_harq::AoiResult> for AoiResult {
    fn from(r: aoi_harq::AoiResult) -> Self {
        let provenance = match r.provenance {
            aoi_harq::Provenance::ClosedForm => "closed_form",
            aoi_harq::Provenance::Simulated => "simulated",
            aoi_harq::Provenance::TruncatedSeries => "truncated_series",
        };
        Self {
            avg_aoi: r.avg_aoi,
            avg_peak_aoi: r.avg_peak_aoi,
            provenance,
        }
    }
}

/// Gaussian tail probability Q(x).
#[pyfunction]
fn q_function(x: f64) -> f64 {
    fbl::q_function(x)
}

/// Decoding error probabilities after each cumulative length in `n`.
#[pyfunction]
fn error_vector(gamma: f64, k: u64, n: Vec<u64>) -> PyResult<Vec<f64>> {
    let spec = aoi_harq::ChannelSpec::new(gamma, k).map_err(err)?;
    let n = BlockAssignment::new(n).map_err(err)?;
    Ok(fbl::error_vector(&spec, &n).map_err(err)?.values().to_vec())
}

/// Closed-form average and peak AoI.
#[pyfunction]
#[pyo3(signature = (config, protocol="reactive"))]
fn evaluate(config: &HarqConfig, protocol: &str) -> PyResult<AoiResult> {
    analytics::evaluate(kind(protocol)?, &config.0)
        .map(Into::into)
        .map_err(err)
}

/// First and second moments of the cycle length, the success-round delay and
/// the number of failed packets.
#[pyfunction]
#[pyo3(signature = (config, protocol="reactive"))]
fn moments(config: &HarqConfig, protocol: &str) -> PyResult<HashMap<&'static str, f64>> {
    let m = analytics::moments(kind(protocol)?, &config.0).map_err(err)?;
    Ok(HashMap::from([
        ("mean_t", m.mean_t),
        ("second_t", m.second_t),
        ("mean_tau_v", m.mean_tau_v),
        ("second_tau_v", m.second_tau_v),
        ("mean_r", m.mean_r),
        ("second_r", m.second_r),
    ]))
}

/// Reactive minus proactive average AoI; never negative.
#[pyfunction]
fn compare(config: &HarqConfig) -> PyResult<f64> {
    analytics::compare_protocols(&config.0).map_err(err)
}

/// Average AoI of a classical special case: "non-arq", "tarq",
/// "classical-arq" or "harq-ir".
#[pyfunction]
#[pyo3(signature = (case, n1=None, eps1=None, m=None, n=None, e=None))]
fn case_reduction(
    case: &str,
    n1: Option<u64>,
    eps1: Option<f64>,
    m: Option<u32>,
    n: Option<Vec<u64>>,
    e: Option<Vec<f64>>,
) -> PyResult<f64> {
    let need = |what: &str| PyValueError::new_err(format!("{what} is required for case '{case}'"));
    let reduction = match case {
        "non-arq" => CaseReduction::NonArq {
            n1: n1.ok_or_else(|| need("n1"))?,
            eps1: eps1.ok_or_else(|| need("eps1"))?,
        },
        "tarq" => CaseReduction::TruncatedArq {
            n1: n1.ok_or_else(|| need("n1"))?,
            eps1: eps1.ok_or_else(|| need("eps1"))?,
            m: m.ok_or_else(|| need("m"))?,
        },
        "classical-arq" => CaseReduction::ClassicalArq {
            n1: n1.ok_or_else(|| need("n1"))?,
            eps1: eps1.ok_or_else(|| need("eps1"))?,
        },
        "harq-ir" => CaseReduction::HarqIr {
            n: BlockAssignment::new(n.ok_or_else(|| need("n"))?).map_err(err)?,
            e: ErrorVector::new(e.ok_or_else(|| need("e"))?).map_err(err)?,
        },
        other => return Err(PyValueError::new_err(format!("unknown case '{other}'"))),
    };
    analytics::case_reduction(&reduction).map_err(err)
}

/// Rateless code with lengths n1, n1+step, ...; returns (result, terms).
#[pyfunction]
#[pyo3(signature = (gamma, k, delays=None, n1=100, step=1, tol=1e-9))]
fn rateless(
    py: Python<'_>,
    gamma: f64,
    k: u64,
    delays: Option<DelayProfile>,
    n1: u64,
    step: u64,
    tol: f64,
) -> PyResult<(AoiResult, usize)> {
    if !(tol > 0.0) || step == 0 {
        return Err(PyValueError::new_err(
            "tol must be positive and step at least 1",
        ));
    }
    let spec = aoi_harq::ChannelSpec::new(gamma, k).map_err(err)?;
    let d = delays_or_zero(delays);
    let out = py
        .detach(|| {
            analytics::rateless_aoi(&FixedIncrement(step), n1, &spec, &d, tol, DEFAULT_ROUND_CAP)
        })
        .map_err(err)?;
    Ok((out.result.into(), out.terms))
}

/// Monte Carlo estimate over `cycles` renewal cycles split across `streams`
/// parallel generator streams.
#[pyfunction]
#[pyo3(signature = (config, protocol="reactive", seed=0, cycles=100_000, streams=1))]
fn simulate(
    py: Python<'_>,
    config: &HarqConfig,
    protocol: &str,
    seed: u64,
    cycles: u64,
    streams: u64,
) -> PyResult<HashMap<&'static str, f64>> {
    let kind = kind(protocol)?;
    let cfg = config.0.clone();
    let totals = py
        .detach(|| sim::run_streams(kind, &cfg, seed, cycles, streams))
        .map_err(err)?;
    let r = totals.result();
    Ok(HashMap::from([
        ("avg_aoi", r.avg_aoi),
        ("avg_peak_aoi", r.avg_peak_aoi),
        ("mean_t", totals.mean_t()),
        ("mean_t2", totals.mean_t2()),
        ("mean_r", totals.mean_r()),
        ("mean_tau_v", totals.mean_tau_v()),
    ]))
}

/// Age-optimal block assignment over [n_min, n_max]; returns
/// (n_optimal, aoi_min, evaluations).
#[pyfunction]
#[pyo3(signature = (n_min, n_max, gamma, k, delays=None, protocol="reactive", method="exhaustive"))]
#[allow(clippy::too_many_arguments)]
fn optimize(
    py: Python<'_>,
    n_min: u64,
    n_max: u64,
    gamma: f64,
    k: u64,
    delays: Option<DelayProfile>,
    protocol: &str,
    method: &str,
) -> PyResult<(Vec<u64>, f64, u64)> {
    let spec = aoi_harq::ChannelSpec::new(gamma, k).map_err(err)?;
    let space = SearchSpace::new(n_min, n_max, spec, delays_or_zero(delays), kind(protocol)?)
        .map_err(err)?;
    let method = match method {
        "exhaustive" => SearchMethod::Exhaustive,
        "heuristic" => SearchMethod::Heuristic,
        other => return Err(PyValueError::new_err(format!("unknown method '{other}'"))),
    };
    let result = py
        .detach(|| match method {
            SearchMethod::Exhaustive => opt::exhaustive_search(&space),
            SearchMethod::Heuristic => opt::heuristic_search(&space),
        })
        .map_err(err)?;
    Ok((
        result.n_optimal.lengths().to_vec(),
        result.aoi_min,
        result.evaluations,
    ))
}

#[pymodule]
pub fn aoi_harq_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", aoi_harq::VERSION)?;
    m.add("AoiError", m.py().get_type::<AoiError>())?;
    m.add_class::<DelayProfile>()?;
    m.add_class::<HarqConfig>()?;
    m.add_class::<AoiResult>()?;
    m.add_function(wrap_pyfunction!(q_function, m)?)?;
    m.add_function(wrap_pyfunction!(error_vector, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(moments, m)?)?;
    m.add_function(wrap_pyfunction!(compare, m)?)?;
    m.add_function(wrap_pyfunction!(case_reduction, m)?)?;
    m.add_function(wrap_pyfunction!(rateless, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(optimize, m)?)?;
    Ok(())
}
