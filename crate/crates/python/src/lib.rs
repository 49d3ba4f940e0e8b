//! Python module over the core samplers and closed forms. Estimate rows
//! cross the boundary as plain dicts keyed like the CSV columns; long runs
//! release the interpreter lock.

use llr_core::analytic;
use llr_core::limit_processes::BrownianGridConfig;
use llr_core::montecarlo::{self, EstimateRow, Model};
use llr_core::poisson_llr::{self, ModelKind, RhoParam, Side, TruncationPolicy};
use llr_core::rng_streams::{SeedSpec, Stream};
use llr_core::validation::{self, ValidationConfig};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn row_dict(py: Python<'_>, r: &EstimateRow) -> PyResult<Py<PyDict>> {
    let d = PyDict::new_bound(py);
    d.set_item("rho", r.rho)?;
    d.set_item("N", r.n)?;
    d.set_item("B", r.b_hat)?;
    d.set_item("se_B", r.se_b)?;
    d.set_item("M", r.m_hat)?;
    d.set_item("se_M", r.se_m)?;
    d.set_item("E", r.e_hat)?;
    d.set_item("se_E", r.se_e)?;
    d.set_item("rho2B", r.rho2_b)?;
    d.set_item("rho2M", r.rho2_m)?;
    d.set_item("truncated", r.truncated)?;
    d.set_item("seed", r.seed)?;
    Ok(d.into())
}

fn dict_row(d: &Bound<'_, PyDict>) -> PyResult<EstimateRow> {
    let get = |k: &str| -> PyResult<Bound<'_, PyAny>> {
        d.get_item(k)?
            .ok_or_else(|| PyValueError::new_err(format!("row is missing '{k}'")))
    };
    let f = |k: &str| -> PyResult<f64> { get(k)?.extract() };
    let u = |k: &str| -> PyResult<u64> { get(k)?.extract() };
    let opt = |k: &str| -> PyResult<Option<f64>> {
        match d.get_item(k)? {
            Some(v) if !v.is_none() => Ok(Some(v.extract()?)),
            _ => Ok(None),
        }
    };
    Ok(EstimateRow {
        rho: f("rho")?,
        n: u("N")?,
        b_hat: f("B")?,
        se_b: f("se_B")?,
        m_hat: f("M")?,
        se_m: f("se_M")?,
        e_hat: f("E")?,
        se_e: f("se_E")?,
        rho2_b: opt("rho2B")?,
        rho2_m: opt("rho2M")?,
        truncated: u("truncated")?,
        seed: u("seed")?,
    })
}

fn parse_side(side: &str) -> PyResult<Side> {
    match side {
        "pos" => Ok(Side::Positive),
        "neg" => Ok(Side::Negative),
        other => Err(PyValueError::new_err(format!(
            "side must be 'pos' or 'neg', got '{other}'"
        ))),
    }
}

/// Exact limit constants as a dict.
#[pyfunction]
fn limit_constants(py: Python<'_>) -> PyResult<Py<PyDict>> {
    let k = analytic::limit_constants();
    let d = PyDict::new_bound(py);
    d.set_item("zeta3", k.zeta3)?;
    d.set_item("B0", k.b0)?;
    d.set_item("M0", k.m0)?;
    d.set_item("E0", k.e0)?;
    d.set_item("Binf", k.b_inf)?;
    d.set_item("Minf", k.m_inf)?;
    d.set_item("Einf", k.e_inf)?;
    Ok(d.into())
}

#[pyfunction]
fn half_moment(rho: f64, y: f64) -> PyResult<f64> {
    analytic::half_moment(rho, y).map_err(err)
}

#[pyfunction]
fn quarter_moment(rho: f64, y: f64) -> PyResult<f64> {
    analytic::quarter_moment(rho, y).map_err(err)
}

#[pyfunction]
fn sqrt_increment_second_moment(rho: f64, y1: f64, y2: f64) -> PyResult<f64> {
    analytic::sqrt_increment_second_moment(rho, y1, y2).map_err(err)
}

/// Mean and raw second moment of the log marginal increment over a window
/// of width delta on side 'pos' or 'neg'.
#[pyfunction]
fn log_increment_moments(rho: f64, delta: f64, side: &str) -> PyResult<(f64, f64)> {
    analytic::log_increment_moments(rho, delta, parse_side(side)?).map_err(err)
}

#[pyfunction]
fn eta_tail(rho: f64, x: f64) -> PyResult<f64> {
    analytic::eta_tail(rho, x).map_err(err)
}

#[pyfunction]
fn eta_exp_quarter_moment(rho: f64) -> PyResult<f64> {
    analytic::eta_exp_quarter_moment(rho).map_err(err)
}

#[pyfunction]
fn solve_ladder_rate(lambda_prime: f64) -> PyResult<f64> {
    analytic::solve_ladder_rate(lambda_prime).map_err(err)
}

#[pyfunction]
fn normal_cdf(x: f64) -> f64 {
    analytic::normal_cdf(x)
}

/// Moment estimates for the two-sided Poisson process at jump size rho.
#[pyfunction]
#[pyo3(signature = (rho, n, seed=42, chunk=4096, margin=40.0))]
fn run_poisson(
    py: Python<'_>,
    rho: f64,
    n: u64,
    seed: u64,
    chunk: u64,
    margin: f64,
) -> PyResult<Py<PyDict>> {
    let model = Model::Poisson {
        rho: RhoParam::new(rho).map_err(err)?,
        policy: TruncationPolicy {
            log_margin: margin,
            ..Default::default()
        },
    };
    let row = py
        .allow_threads(|| montecarlo::run_replications(&model, n, &SeedSpec::new(seed), chunk))
        .map_err(err)?;
    row_dict(py, &row)
}

/// Moment estimates for the Brownian limit on a grid of step h.
#[pyfunction]
#[pyo3(signature = (n, seed=42, chunk=4096, h=0.005, margin=40.0))]
fn run_brownian(
    py: Python<'_>,
    n: u64,
    seed: u64,
    chunk: u64,
    h: f64,
    margin: f64,
) -> PyResult<Py<PyDict>> {
    let model = Model::Brownian(BrownianGridConfig {
        h,
        log_margin: margin,
        ..Default::default()
    });
    let row = py
        .allow_threads(|| montecarlo::run_replications(&model, n, &SeedSpec::new(seed), chunk))
        .map_err(err)?;
    row_dict(py, &row)
}

/// Moment estimates for the degenerate large-rho limit.
#[pyfunction]
#[pyo3(signature = (n, seed=42, chunk=4096))]
fn run_infinity(py: Python<'_>, n: u64, seed: u64, chunk: u64) -> PyResult<Py<PyDict>> {
    let row = py
        .allow_threads(|| {
            montecarlo::run_replications(&Model::Infinity, n, &SeedSpec::new(seed), chunk)
        })
        .map_err(err)?;
    row_dict(py, &row)
}

/// One row per grid point; with limits=True the Brownian and degenerate
/// rows are appended.
#[pyfunction]
#[pyo3(signature = (grid, n, seed=42, chunk=4096, margin=40.0, limits=false, h=0.005))]
#[allow(clippy::too_many_arguments)]
fn sweep(
    py: Python<'_>,
    grid: Vec<f64>,
    n: u64,
    seed: u64,
    chunk: u64,
    margin: f64,
    limits: bool,
    h: f64,
) -> PyResult<Vec<Py<PyDict>>> {
    let policy = TruncationPolicy {
        log_margin: margin,
        ..Default::default()
    };
    let brown = BrownianGridConfig {
        h,
        log_margin: margin,
        ..Default::default()
    };
    let rows = py
        .allow_threads(|| {
            montecarlo::sweep(
                &grid,
                n,
                &SeedSpec::new(seed),
                chunk,
                &policy,
                limits.then_some(&brown),
            )
        })
        .map_err(err)?;
    rows.iter().map(|r| row_dict(py, r)).collect()
}

/// Raw (zeta, xi) functional draws at jump size rho.
#[pyfunction]
#[pyo3(signature = (rho, count, seed=42, margin=40.0))]
fn draw_functionals(
    py: Python<'_>,
    rho: f64,
    count: u64,
    seed: u64,
    margin: f64,
) -> PyResult<Vec<(f64, f64)>> {
    let p = RhoParam::new(rho).map_err(err)?;
    let policy = TruncationPolicy {
        log_margin: margin,
        ..Default::default()
    };
    py.allow_threads(|| {
        let mut stream = Stream::from_spec(&SeedSpec::new(seed));
        (0..count)
            .map(|_| {
                poisson_llr::sample_zeta_xi(&p, &mut stream, &policy).map(|s| (s.zeta, s.xi))
            })
            .collect::<Result<Vec<_>, _>>()
    })
    .map_err(err)
}

/// Rescales a canonical row to an intensity-change model with rates a, b.
#[pyfunction]
fn rescale_intensity(py: Python<'_>, row: &Bound<'_, PyDict>, a: f64, b: f64) -> PyResult<Py<PyDict>> {
    let r = dict_row(row)?;
    let out = poisson_llr::rescale_to_model(&r, &ModelKind::IntensityChange { a, b }).map_err(err)?;
    row_dict(py, &out)
}

/// Rescales a canonical row to a jump-size-change model with intensity tau
/// and jump sizes s_minus, s_plus.
#[pyfunction]
fn rescale_jump(
    py: Python<'_>,
    row: &Bound<'_, PyDict>,
    tau: f64,
    s_minus: f64,
    s_plus: f64,
) -> PyResult<Py<PyDict>> {
    let r = dict_row(row)?;
    let kind = ModelKind::JumpSizeChange {
        tau,
        s_minus,
        s_plus,
    };
    let out = poisson_llr::rescale_to_model(&r, &kind).map_err(err)?;
    row_dict(py, &out)
}

/// Kolmogorov-Smirnov distance between samples (sorted internally) and a
/// CDF given as a Python callable.
#[pyfunction]
fn ks_statistic(py: Python<'_>, samples: Vec<f64>, cdf: Py<PyAny>) -> PyResult<f64> {
    let mut sorted = samples;
    sorted.sort_by(f64::total_cmp);
    if sorted.is_empty() {
        return Err(PyValueError::new_err("samples must be non-empty"));
    }
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f: f64 = cdf.call1(py, (x,))?.extract(py)?;
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    Ok(d)
}

/// Runs the acceptance checks; quick=True cuts replications tenfold and
/// doubles tolerances. Returns one dict per check.
#[pyfunction]
#[pyo3(signature = (seed=42, quick=false))]
fn validate(py: Python<'_>, seed: u64, quick: bool) -> PyResult<Vec<Py<PyDict>>> {
    let cfg = ValidationConfig {
        seed,
        n_scale: if quick { 0.1 } else { 1.0 },
        tol_scale: if quick { 2.0 } else { 1.0 },
    };
    let outcomes = py.allow_threads(|| validation::run_all(&cfg));
    outcomes
        .iter()
        .map(|o| {
            let d = PyDict::new_bound(py);
            d.set_item("id", o.id)?;
            d.set_item("passed", o.passed)?;
            d.set_item("detail", &o.detail)?;
            Ok(d.into())
        })
        .collect()
}

#[pymodule]
fn llr_lab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(limit_constants, m)?)?;
    m.add_function(wrap_pyfunction!(half_moment, m)?)?;
    m.add_function(wrap_pyfunction!(quarter_moment, m)?)?;
    m.add_function(wrap_pyfunction!(sqrt_increment_second_moment, m)?)?;
    m.add_function(wrap_pyfunction!(log_increment_moments, m)?)?;
    m.add_function(wrap_pyfunction!(eta_tail, m)?)?;
    m.add_function(wrap_pyfunction!(eta_exp_quarter_moment, m)?)?;
    m.add_function(wrap_pyfunction!(solve_ladder_rate, m)?)?;
    m.add_function(wrap_pyfunction!(normal_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(run_poisson, m)?)?;
    m.add_function(wrap_pyfunction!(run_brownian, m)?)?;
    m.add_function(wrap_pyfunction!(run_infinity, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(draw_functionals, m)?)?;
    m.add_function(wrap_pyfunction!(rescale_intensity, m)?)?;
    m.add_function(wrap_pyfunction!(rescale_jump, m)?)?;
    m.add_function(wrap_pyfunction!(ks_statistic, m)?)?;
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    Ok(())
}
