//! Python bindings: exact Harish-Chandra values, PS masses, critical
//! exponents, sphere sums and fiber sizes.

use num_rational::Rational64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use freerep::asymptotics::report::Value;
use freerep::asymptotics::{coefficient_square_sum, fiber_sizes as fibers};
use freerep::group::metric::MetricSpec;
use freerep::group::{GroupContext, ReducedWord};
use freerep::measures::{critical_exponent, ps_measure, rn_integral, BoundaryMeasure};
use freerep::representation::{harish_chandra, StepFunction};
use freerep::scalar::Quad;

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn word(s: &str, rank: usize) -> PyResult<ReducedWord> {
    let g: ReducedWord = s.parse().map_err(err)?;
    if g.min_rank() > rank {
        return Err(err(format!("{s} uses a generator outside rank {rank}")));
    }
    Ok(g)
}

fn word_measure(rank: usize) -> PyResult<BoundaryMeasure> {
    Ok(ps_measure(&GroupContext::word(rank).map_err(err)?))
}

fn vector(s: &str, rank: usize) -> PyResult<StepFunction<Quad>> {
    let stem = s.strip_prefix("1_").unwrap_or(s);
    match stem {
        "1" => Ok(StepFunction::one(rank)),
        _ => Ok(StepFunction::indicator(rank, word(stem, rank)?)),
    }
}

fn pair(v: Value) -> (String, f64) {
    (v.to_string(), v.to_f64())
}

/// `Ξ(g)` for the word metric on `F_rank`, as (exact string, float).
#[pyfunction]
#[pyo3(signature = (g, rank = 2))]
fn xi(g: &str, rank: usize) -> PyResult<(String, f64)> {
    let mu = word_measure(rank)?;
    let v: Quad = harish_chandra(&word(g, rank)?, mu.as_word().expect("word metric"));
    Ok(pair(Value::Exact(v)))
}

/// Patterson-Sullivan mass of the cylinder of `stem` for the word metric.
#[pyfunction]
#[pyo3(signature = (stem, rank = 2))]
fn ps_mass(stem: &str, rank: usize) -> PyResult<String> {
    let mu = word_measure(rank)?;
    let m = mu.mass_exact(word(stem, rank)?.letters()).expect("word measure is exact");
    Ok(m.to_string())
}

/// `∫ (dg_*μ/dμ)^{1/2} dμ`; equals 1 for every `g`.
#[pyfunction]
#[pyo3(signature = (g, rank = 2))]
fn rn_total(g: &str, rank: usize) -> PyResult<f64> {
    Ok(rn_integral(&word(g, rank)?, &word_measure(rank)?).value)
}

/// Critical exponent of the metric with generator lengths `lengths`
/// (rationals written "p" or "p/q").
#[pyfunction]
fn alpha(lengths: Vec<String>) -> PyResult<f64> {
    let ls = lengths.iter().map(|s| s.parse::<Rational64>().map_err(err)).collect::<PyResult<Vec<_>>>()?;
    let m = MetricSpec::weighted(ls).map_err(err)?;
    Ok(critical_exponent(&m).map_err(err)?.alpha)
}

/// `Σ_{|g|=n} |⟨π(g)v, w⟩|²` for `v`, `w` given as "1" or "1_<stem>".
#[pyfunction]
#[pyo3(signature = (n, v = "1", w = "1", rank = 2))]
fn sphere_sum(n: usize, v: &str, w: &str, rank: usize) -> PyResult<(String, f64)> {
    let mu = word_measure(rank)?;
    let q = coefficient_square_sum(&vector(v, rank)?, &vector(w, rank)?, n, &mu).map_err(err)?;
    Ok(pair(q))
}

/// Fiber sizes of `S_r1 × S_r2 → G` as (|g|, identity, count, min, max).
#[pyfunction]
#[pyo3(signature = (r1, r2, rank = 2))]
fn fiber_sizes(r1: usize, r2: usize, rank: usize) -> Vec<(usize, bool, usize, u64, u64)> {
    fibers(rank, r1, r2).into_iter().map(|f| (r1 + r2 - 2 * f.p, f.identity, f.elements, f.min, f.max)).collect()
}

#[pymodule]
fn pyfreerep(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(xi, m)?)?;
    m.add_function(wrap_pyfunction!(ps_mass, m)?)?;
    m.add_function(wrap_pyfunction!(rn_total, m)?)?;
    m.add_function(wrap_pyfunction!(alpha, m)?)?;
    m.add_function(wrap_pyfunction!(sphere_sum, m)?)?;
    m.add_function(wrap_pyfunction!(fiber_sizes, m)?)?;
    Ok(())
}
