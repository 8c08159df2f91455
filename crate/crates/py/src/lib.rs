//! Python bindings for `radwave-core`.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use radwave_core::cli::{cmd_simulate, ExperimentConfig};
use radwave_core::grid::{GridSpec, InitialDataSpec};
use radwave_core::solver::{evolve_forward, exact_linear_solution as linear_solution};
use radwave_core::{acceptance, ConformalChart, Error};

fn to_py(e: Error) -> PyErr {
    match e.exit_code() {
        1 => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

/// Times, radii and φ rows of a forward run.
type Evolution = (Vec<f64>, Vec<f64>, Vec<Vec<f64>>);

fn chart(p: f64) -> PyResult<ConformalChart> {
    ConformalChart::new(p).map_err(to_py)
}

#[pyfunction]
fn alpha_p(p: f64) -> PyResult<f64> {
    radwave_core::alpha_p(p).map_err(to_py)
}

#[pyfunction]
fn map_forward(p: f64, u: f64, v: f64) -> PyResult<(f64, f64)> {
    chart(p)?.map_forward(u, v).map_err(to_py)
}

#[pyfunction]
fn map_inverse(p: f64, ut: f64, vt: f64) -> PyResult<(f64, f64)> {
    chart(p)?.map_inverse(ut, vt).map_err(to_py)
}

#[pyfunction]
fn omega(p: f64, u: f64, v: f64) -> PyResult<f64> {
    chart(p)?.omega(u, v).map_err(to_py)
}

#[pyfunction]
fn conformal_coefficient(p: f64, ut: f64, vt: f64) -> PyResult<f64> {
    chart(p)?.conformal_coefficient(ut, vt).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (amplitude, support_radius, smoothness_exponent, t, r, velocity_amplitude = 0.0))]
fn exact_linear_solution(
    amplitude: f64,
    support_radius: f64,
    smoothness_exponent: u32,
    t: f64,
    r: f64,
    velocity_amplitude: f64,
) -> PyResult<f64> {
    let data = InitialDataSpec::bump(amplitude, support_radius, smoothness_exponent)
        .with_velocity(velocity_amplitude);
    linear_solution(&data, t, r).map_err(to_py)
}

/// Forward evolution; returns (times, radii, φ rows).
#[pyfunction]
#[pyo3(signature = (p, amplitude, support_radius, smoothness_exponent, t_end, r_max, h, lam = 0.8, velocity_amplitude = 0.0))]
#[allow(clippy::too_many_arguments)]
fn evolve(
    p: f64,
    amplitude: f64,
    support_radius: f64,
    smoothness_exponent: u32,
    t_end: f64,
    r_max: f64,
    h: f64,
    lam: f64,
    velocity_amplitude: f64,
) -> PyResult<Evolution> {
    let data = InitialDataSpec::bump(amplitude, support_radius, smoothness_exponent)
        .with_velocity(velocity_amplitude);
    let spec = GridSpec::new(1.0, t_end, r_max, h, lam).map_err(to_py)?;
    let field = evolve_forward(&data, &spec, p).map_err(to_py)?.field;
    let times = (0..field.levels()).map(|i| field.level_time(i)).collect();
    let rows = (0..field.levels()).map(|i| field.phi_row(i)).collect();
    Ok((times, spec.radii(), rows))
}

/// Runs `simulate` on a JSON configuration and returns the summary as JSON.
#[pyfunction]
fn simulate(config_json: &str) -> PyResult<String> {
    let config = ExperimentConfig::from_json(config_json).map_err(to_py)?;
    let summary = cmd_simulate(&config).map_err(to_py)?;
    serde_json::to_string(&summary).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

/// Runs acceptance criteria; returns (id, passed, line) per criterion.
#[pyfunction]
fn validate(criteria: Vec<u8>) -> PyResult<Vec<(u8, bool, String)>> {
    if let Some(bad) = criteria.iter().find(|&&id| !(1..=11).contains(&id)) {
        return Err(PyValueError::new_err(format!("no criterion {bad}")));
    }
    Ok(criteria
        .into_iter()
        .map(|id| {
            let o = acceptance::run(id);
            (o.id, o.passed, o.line())
        })
        .collect())
}

#[pymodule]
pub fn radwave(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_function(wrap_pyfunction!(alpha_p, m)?)?;
    m.add_function(wrap_pyfunction!(map_forward, m)?)?;
    m.add_function(wrap_pyfunction!(map_inverse, m)?)?;
    m.add_function(wrap_pyfunction!(omega, m)?)?;
    m.add_function(wrap_pyfunction!(conformal_coefficient, m)?)?;
    m.add_function(wrap_pyfunction!(exact_linear_solution, m)?)?;
    m.add_function(wrap_pyfunction!(evolve, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    Ok(())
}
