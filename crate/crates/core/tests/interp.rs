use radwave_core::*;
use radwave_core::grid::{FieldKind, GridSpec};

fn field_from(f: impl Fn(f64, f64) -> f64) -> SpacetimeField {
    let spec = GridSpec::new(0.0, 1.0, 1.0, 0.125, 0.5).unwrap();
    let mut field = SpacetimeField::zeros(&spec, 1, 3.0, FieldKind::Forward).unwrap();
    for i in 0..field.levels() {
        let t = field.level_time(i);
        for j in 0..field.nodes() {
            field.values[[i, j]] = f(t, spec.radius(j));
        }
    }
    field
}

#[test]
fn reproduces_nodes() {
    let field = field_from(|t, r| (3.0 * t).sin() * r + r * r * r);
    for i in [0, 3, 16] {
        for j in [2, 5, 8] {
            let t = field.level_time(i);
            let r = field.spec.radius(j);
            assert_eq!(field.interpolate_chi(t, r).unwrap(), field.values[[i, j]]);
            assert_eq!(field.interpolate(t, r).unwrap(), field.values[[i, j]] / r);
        }
    }
    // node inside the axis band
    let r = field.spec.radius(1);
    assert_eq!(
        field.interpolate(field.level_time(5), r).unwrap(),
        field.values[[5, 1]] / r
    );
}

#[test]
fn exact_on_cubic_polynomials() {
    let field = field_from(|t, r| 1.0 + t - 2.0 * t * t * t + r * t * t - r * r * r);
    for &(t, r) in &[(0.13, 0.37), (0.91, 0.99), (0.02, 0.6)] {
        let exact = 1.0 + t - 2.0 * t * t * t + r * t * t - r * r * r;
        assert!((field.interpolate_chi(t, r).unwrap() - exact).abs() < 1e-12);
    }
}

#[test]
fn derivatives_exact_on_cubics() {
    let f = |t: f64, r: f64| 1.0 + t - 2.0 * t * t * t + r * t * t - r * r * r;
    let field = field_from(f);
    for &(t, r) in &[(0.13, 0.37), (0.91, 0.99), (0.5, 0.5), (0.0, 0.0)] {
        let (v, vt, vr) = field.interpolate_chi_derivatives(t, r).unwrap();
        assert!((v - f(t, r)).abs() < 1e-12);
        assert!((vt - (1.0 - 6.0 * t * t + 2.0 * r * t)).abs() < 1e-11);
        assert!((vr - (t * t - 3.0 * r * r)).abs() < 1e-11);
    }
}

#[test]
fn linear_chi_gives_unit_phi() {
    let field = field_from(|_, r| r);
    for &(t, r) in &[(0.5, 0.0), (0.31, 0.05), (0.7, 0.2), (0.99, 0.93)] {
        assert!((field.interpolate(t, r).unwrap() - 1.0).abs() < 1e-13);
    }
}

#[test]
fn axis_limit_of_r_times_one_plus_r() {
    let field = field_from(|_, r| r * (1.0 + r));
    assert!((field.interpolate(0.4, 0.0).unwrap() - 1.0).abs() < 1e-13);
    assert!((field.interpolate(0.4, 0.1).unwrap() - 1.1).abs() < 1e-13);
}

#[test]
fn axis_recovery_is_second_order() {
    // smooth odd χ = sin(r) e^{-t}; φ(t, 0) = e^{-t}
    let mut errs = Vec::new();
    for h in [0.1, 0.05, 0.025] {
        let spec = GridSpec::new(0.0, 1.0, 1.0, h, 0.5).unwrap();
        let mut f = SpacetimeField::zeros(&spec, 1, 3.0, FieldKind::Forward).unwrap();
        for i in 0..f.levels() {
            let t = f.level_time(i);
            for j in 0..f.nodes() {
                f.values[[i, j]] = (2.0 * spec.radius(j)).sin() * (-t).exp();
            }
        }
        let exact = 2.0 * (-0.5f64).exp();
        errs.push((f.interpolate(0.5, 0.0).unwrap() - exact).abs());
    }
    assert!(errs[0] / errs[1] > 3.5 && errs[1] / errs[2] > 3.5, "{errs:?}");
}

#[test]
fn out_of_domain_query() {
    let field = field_from(|_, r| r);
    match field.interpolate(1.5, 0.2) {
        Err(Error::Domain { t, r, .. }) => assert_eq!((t, r), (1.5, 0.2)),
        other => panic!("unexpected {other:?}"),
    }
    assert!(field.interpolate(0.5, -0.1).is_err());
    assert!(field.interpolate(0.5, 1.2).is_err());
}
