use radwave_core::*;
use radwave_core::dual::*;

#[test]
fn horizon_covers_compared_region() {
    let chart = ConformalChart::new(3.0).unwrap();
    let s = DualSettings::default();
    assert!((forward_horizon(&chart, 0.4, &s, true).unwrap() - 10.0).abs() < 1e-9);
    let slice_only = forward_horizon(&chart, 0.4, &s, false).unwrap();
    assert!(slice_only > 3.4 && slice_only < 3.6, "{slice_only}");
    let chart = ConformalChart::new(4.0).unwrap();
    let h = forward_horizon(&chart, 0.25, &s, true).unwrap();
    assert!((h - 10f64.sqrt()).abs() < 1e-9);
}

#[test]
fn forward_grid_is_commensurable() {
    let data = InitialDataSpec::bump(1.0, 0.4, 8);
    let g = forward_grid(&data, 1.0 / 256.0, 0.8, 10.0).unwrap();
    assert_eq!(g.t_end, 10.0);
    assert!(g.r_max >= 9.4 && g.r_max < 9.4 + 1.0 / 256.0);
    let g = forward_grid(&data, 1.0 / 64.0, 0.8, 3.1623).unwrap();
    assert!(g.t_end >= 3.1623);
}

#[test]
fn zero_data_gives_zero_dual_run() {
    let data = InitialDataSpec::bump(0.0, 0.25, 8);
    let run = run_dual(&data, 4.0, 1.0 / 32.0, &DualSettings::default().with_h(1.0 / 32.0), false).unwrap();
    assert!(run.transformed.field.values.iter().all(|v| *v == 0.0));
}
