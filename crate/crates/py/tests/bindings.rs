use pyo3::prelude::*;
use pyo3::types::PyModule;

fn with_module<R>(f: impl FnOnce(&Bound<'_, PyModule>) -> R) -> R {
    Python::attach(|py| {
        let m = PyModule::new(py, "radwave").unwrap();
        radwave::radwave(&m).unwrap();
        f(&m)
    })
}

#[test]
fn chart_functions() {
    with_module(|m| {
        let omega: f64 = m.getattr("omega").unwrap().call1((4.0, 2.0, 1.0)).unwrap().extract().unwrap();
        assert!((omega - 0.75).abs() < 1e-15);
        let c: f64 = m
            .getattr("conformal_coefficient")
            .unwrap()
            .call1((4.0, -0.25, -1.0))
            .unwrap()
            .extract()
            .unwrap();
        assert!((c - 0.84375).abs() < 1e-12);
    });
}

#[test]
fn errors_map_to_python_exceptions() {
    with_module(|m| {
        let py = m.py();
        let err = m.getattr("alpha_p").unwrap().call1((2.0,)).unwrap_err();
        assert!(err.is_instance_of::<pyo3::exceptions::PyValueError>(py));
        let err = m.getattr("omega").unwrap().call1((3.0, 1.0, 2.0)).unwrap_err();
        assert!(err.is_instance_of::<pyo3::exceptions::PyRuntimeError>(py));
        let err = m.getattr("validate").unwrap().call1((vec![0u8],)).unwrap_err();
        assert!(err.is_instance_of::<pyo3::exceptions::PyValueError>(py));
    });
}

#[test]
fn evolve_returns_rectangular_rows() {
    with_module(|m| {
        let (t, r, rows): (Vec<f64>, Vec<f64>, Vec<Vec<f64>>) = m
            .getattr("evolve")
            .unwrap()
            .call1((3.0, 0.0, 0.4, 4, 1.5, 1.0, 0.125))
            .unwrap()
            .extract()
            .unwrap();
        assert_eq!(rows.len(), t.len());
        assert!(rows.iter().all(|row| row.len() == r.len() && row.iter().all(|x| *x == 0.0)));
    });
}
