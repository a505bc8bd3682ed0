//! Python bindings: expansions, bounds, kernels, transport and the Stein
//! check. Activations are given as strings (`relu`, `erf`, `poly:c0,c1,...`,
//! optionally `+centered`).

use std::collections::HashMap;

use nalgebra::DMatrix;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use spherenet::bounds::{self, MomentProfile};
use spherenet::experiment;
use spherenet::netsim::{self, SLaw};
use spherenet::orthopoly::{self, ActivationSpec};
use spherenet::transport::{self, SampleCloud};

fn err(e: spherenet::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn activation(s: &str) -> PyResult<ActivationSpec> {
    s.parse().map_err(err)
}

fn matrix(rows: &[Vec<f64>]) -> PyResult<DMatrix<f64>> {
    let m = rows.len();
    if rows.iter().any(|r| r.len() != m) {
        return Err(PyValueError::new_err("matrix must be square"));
    }
    Ok(DMatrix::from_fn(m, m, |i, j| rows[i][j]))
}

#[pyfunction]
fn harmonic_dim(d: usize, l: usize) -> PyResult<u64> {
    orthopoly::harmonic_dim(d, l).map_err(err)
}

/// `φ̂_l` for `l = 0..=lmax`.
#[pyfunction]
fn gegenbauer_coefficients(activation_spec: &str, d: usize, lmax: usize) -> PyResult<Vec<f64>> {
    let e = orthopoly::expand_activation(&activation(activation_spec)?, d, lmax).map_err(err)?;
    Ok(e.gegenbauer)
}

/// `a_l` for `l = 0..=lmax`.
#[pyfunction]
fn hermite_coefficients(activation_spec: &str, lmax: usize) -> PyResult<Vec<f64>> {
    Ok(orthopoly::hermite_coeffs(
        &activation(activation_spec)?,
        lmax,
    ))
}

#[pyfunction]
#[pyo3(signature = (d, k, activation_spec, n, s_law = "rademacher"))]
fn theorem1_constant(
    d: usize,
    k: usize,
    activation_spec: &str,
    n: usize,
    s_law: &str,
) -> PyResult<HashMap<String, f64>> {
    let spec = activation(activation_spec)?.centered(true);
    let e = orthopoly::expand_activation(&spec, d, k).map_err(err)?;
    let law: SLaw = s_law.parse().map_err(err)?;
    let r = bounds::theorem1_constant(d, k, &e, &MomentProfile::from_law(law).map_err(err)?, n)
        .map_err(err)?;
    Ok(HashMap::from([
        ("C".to_string(), r.c),
        ("w2_bound".to_string(), r.w2_bound),
        ("internal_s2".to_string(), r.internal_s2),
        ("internal_w2_bound".to_string(), r.internal_w2_bound),
        ("dimension_sum".to_string(), r.dimension_sum.exact),
        ("dimension_sum_bound".to_string(), r.dimension_sum.bound),
        ("dirichlet_form".to_string(), r.dirichlet_form),
        ("dirichlet_bound".to_string(), r.dirichlet_bound),
    ]))
}

/// `(rate, k, valid)`.
#[pyfunction]
fn relu_rate(n: usize, d: usize) -> PyResult<(f64, usize, bool)> {
    let r = bounds::relu_rate(n, d).map_err(err)?;
    Ok((r.rate, r.k, r.valid))
}

/// `(rate, k, valid)`.
#[pyfunction]
fn erf_rate(n: usize, d: usize) -> PyResult<(f64, usize, bool)> {
    let r = bounds::erf_rate(n, d).map_err(err)?;
    Ok((r.rate, r.k, r.valid))
}

#[pyfunction]
fn sample_sphere(d: usize, count: usize, seed: u64) -> PyResult<Vec<Vec<f64>>> {
    netsim::sample_sphere(d, count, seed).map_err(err)
}

#[pyfunction]
fn gp_kernel(activation_spec: &str, points: Vec<Vec<f64>>, lmax: usize) -> PyResult<Vec<Vec<f64>>> {
    let d = points.first().map_or(0, Vec::len);
    let e = orthopoly::expand_activation(&activation(activation_spec)?, d, lmax).map_err(err)?;
    let k = netsim::gp_kernel(&e, &points).map_err(err)?;
    Ok(k.matrix
        .row_iter()
        .map(|r| r.iter().copied().collect())
        .collect())
}

#[pyfunction]
fn w2_gaussian(cov1: Vec<Vec<f64>>, cov2: Vec<Vec<f64>>) -> PyResult<f64> {
    transport::w2_gaussian(&matrix(&cov1)?, &matrix(&cov2)?).map_err(err)
}

/// Exact W₂ between two equal-size clouds of grid-valued samples.
#[pyfunction]
fn w2_exact(a: Vec<Vec<f64>>, b: Vec<Vec<f64>>) -> PyResult<f64> {
    let (a, b) = (
        SampleCloud::new(a).map_err(err)?,
        SampleCloud::new(b).map_err(err)?,
    );
    transport::w2_empirical_exact(&transport::sphere_l2_cost(&a, &b).map_err(err)?).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (activation_spec, d, k, samples, seed, tests = 20))]
fn stein_check(
    activation_spec: &str,
    d: usize,
    k: usize,
    samples: usize,
    seed: u64,
    tests: usize,
) -> PyResult<HashMap<String, f64>> {
    let c = experiment::stein_check_for(&activation(activation_spec)?, d, k, tests, samples, seed)
        .map_err(err)?;
    let flag = |b: bool| if b { 1.0 } else { 0.0 };
    Ok(HashMap::from([
        ("passed".to_string(), flag(c.passed())),
        ("control_rejected".to_string(), flag(c.control_rejected())),
        (
            "worst_z".to_string(),
            c.identity.worst_z().max(c.suite.worst_z()),
        ),
        ("corrupted_worst_z".to_string(), c.corrupted.worst_z()),
    ]))
}

#[pymodule]
fn spherenet_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(harmonic_dim, m)?)?;
    m.add_function(wrap_pyfunction!(gegenbauer_coefficients, m)?)?;
    m.add_function(wrap_pyfunction!(hermite_coefficients, m)?)?;
    m.add_function(wrap_pyfunction!(theorem1_constant, m)?)?;
    m.add_function(wrap_pyfunction!(relu_rate, m)?)?;
    m.add_function(wrap_pyfunction!(erf_rate, m)?)?;
    m.add_function(wrap_pyfunction!(sample_sphere, m)?)?;
    m.add_function(wrap_pyfunction!(gp_kernel, m)?)?;
    m.add_function(wrap_pyfunction!(w2_gaussian, m)?)?;
    m.add_function(wrap_pyfunction!(w2_exact, m)?)?;
    m.add_function(wrap_pyfunction!(stein_check, m)?)?;
    Ok(())
}
