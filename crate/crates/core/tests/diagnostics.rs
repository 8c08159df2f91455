use radwave_core::*;
use radwave_core::diagnostics::*;
use radwave_core::grid::GridSpec;

fn slice_from(h: f64, n: usize, t: f64, phi: impl Fn(f64) -> f64, phi_t: impl Fn(f64) -> f64) -> TimeSlice {
    let r_nodes: Vec<f64> = (0..n).map(|j| j as f64 * h).collect();
    TimeSlice {
        t,
        phi: r_nodes.iter().map(|&r| phi(r)).collect(),
        phi_t: r_nodes.iter().map(|&r| phi_t(r)).collect(),
        r_nodes,
    }
}

#[test]
fn zero_slice_has_zero_energy() {
    let s = slice_from(0.1, 11, 1.0, |_| 0.0, |_| 0.0);
    assert_eq!(conserved_energy(&s, 3.0).unwrap(), EnergyRecord::zero(1.0));
}

#[test]
fn too_few_nodes() {
    let s = slice_from(0.1, 2, 1.0, |_| 1.0, |_| 0.0);
    assert!(matches!(conserved_energy(&s, 3.0), Err(Error::Degenerate(_))));
}

#[test]
fn polynomial_energy_matches_closed_form() {
    // φ = 1 − r², φₜ = r on [0, 1]
    let s = slice_from(1.0 / 64.0, 65, 1.0, |r| 1.0 - r * r, |r| r);
    let e = conserved_energy(&s, 3.0).unwrap();
    assert!((e.kinetic - 0.1).abs() < 1e-7);
    assert!((e.gradient - 0.4).abs() < 1e-7);
    let exact_pot = 0.25 * (1.0 / 3.0 - 4.0 / 5.0 + 6.0 / 7.0 - 4.0 / 9.0 + 1.0 / 11.0);
    assert!((e.potential - exact_pot).abs() < 1e-6);
    assert!((e.total - (e.kinetic + e.gradient + e.potential)).abs() < 1e-15);
}

#[test]
fn derivative_is_fourth_order() {
    let errs: Vec<f64> = [0.05, 0.025]
        .iter()
        .map(|&h| {
            let n = (2.0 / h) as usize + 1;
            let vals: Vec<f64> = (0..n).map(|j| (j as f64 * h).cos()).collect();
            radial_derivative_even(&vals, h)
                .iter()
                .enumerate()
                .map(|(j, d)| (d + (j as f64 * h).sin()).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    assert!(errs[0] / errs[1] > 14.0, "{errs:?}");
}

#[test]
fn p3_pseudo_energy_equals_energy() {
    let chart = ConformalChart::new(3.0).unwrap();
    let s = slice_from(0.01, 101, -0.5, |r| (1.0 - r).powi(3), |r| r.sin());
    assert_eq!(
        pseudo_energy(&s, &chart, 3.0).unwrap(),
        conserved_energy(&s, 3.0).unwrap()
    );
    let late = TimeSlice { t: 0.1, ..s };
    assert!(pseudo_energy(&late, &chart, 3.0).is_err());
}

#[test]
fn power_law_fit_recovers_exponent() {
    let t: Vec<f64> = (0..=200).map(|k| 30.0 + 0.35 * k as f64).collect();
    let series = ProbeSeries {
        r_probe: 0.1,
        phi: t.iter().map(|x| 3.0 * x.powi(-2)).collect(),
        t,
    };
    let fit = tail_exponent_fit(&series, (30.0, 100.0)).unwrap();
    assert!((fit.exponent + 2.0).abs() < 1e-6);
    assert!((fit.amplitude - 3.0).abs() < 1e-6);
    assert!(fit.rms_residual < 1e-10 && !fit.oscillatory);
    assert!(tail_exponent_fit(&series, (20.0, 50.0)).is_err());
}

#[test]
fn oscillating_tail_fits_maxima() {
    let t: Vec<f64> = (0..3000).map(|k| 10.0 + 0.03 * k as f64).collect();
    let series = ProbeSeries {
        r_probe: 0.1,
        phi: t.iter().map(|x| x.powi(-3) * (2.0 * x).cos()).collect(),
        t,
    };
    let fit = tail_exponent_fit(&series, (20.0, 90.0)).unwrap();
    assert!(fit.oscillatory);
    assert!((fit.exponent + 3.0).abs() < 0.05, "{}", fit.exponent);
}

#[test]
fn noise_floor_is_detected() {
    let t: Vec<f64> = (1..100).map(|k| k as f64).collect();
    let mut phi: Vec<f64> = t.iter().map(|x| x.powi(-2)).collect();
    phi[60] = 0.0;
    let series = ProbeSeries { r_probe: 0.1, t, phi };
    assert!(matches!(
        tail_exponent_fit(&series, (30.0, 90.0)),
        Err(Error::NoiseFloor(_))
    ));
}

#[test]
fn zero_fields_give_zero_monitors() {
    let spec = GridSpec::new(1.0, 2.0, 2.0, 0.125, 0.5).unwrap();
    let f = SpacetimeField::zeros(&spec, 1, 3.0, FieldKind::Forward).unwrap();
    let d = decay_bound_monitor(&f, 3.0).unwrap();
    assert!(d.b.iter().all(|b| *b == 0.0));
    let spec = GridSpec::new(-1.0, -0.5, 2.0, 0.125, 0.5).unwrap();
    let g = SpacetimeField::zeros(&spec, 1, 4.0, FieldKind::Transformed).unwrap();
    assert_eq!(uniform_bound_report(&g).unwrap().overall, 0.0);
    let chart = ConformalChart::new(4.0).unwrap();
    let flux = lightcone_flux(&g, -0.6, &chart, 4.0, None).unwrap();
    assert_eq!((flux.flux, flux.e0, flux.ratio), (0.0, 0.0, 0.0));
    let res = divergence_identity_residual(&g, &chart, 4.0, -0.1).unwrap();
    assert_eq!(res.max_norm, 0.0);
    assert!(res.points > 0);
    assert!(lightcone_flux(&g, 0.0, &chart, 4.0, None).is_err());
}

#[test]
fn plateau_ratio_of_constant_series() {
    let mut s = DecaySeries::default();
    for k in 0..=100 {
        s.push(1.0 + k as f64, 2.0);
    }
    assert_eq!(s.plateau_ratio(100.0).unwrap(), 1.0);
    assert_eq!(*s.running_max.last().unwrap(), 2.0);
}

#[test]
fn csv_export() {
    let mut d = DiagnosticsSeries::default();
    d.push(1.0, 0.5, "energy");
    d.push(1.5, 0.25, "energy");
    assert_eq!(d.to_csv(), "t,value,kind\n1,0.5,energy\n1.5,0.25,energy\n");
}
