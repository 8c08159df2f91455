use radwave_core::*;
use proptest::prelude::*;

fn sample_field(seed: f64, stride: usize, edge: Option<f64>) -> SpacetimeField {
    let spec = GridSpec::new(1.0, 2.0, 1.0, 0.25, 0.5).unwrap();
    let mut f = SpacetimeField::zeros(&spec, stride, 4.0, FieldKind::Transformed).unwrap();
    for (k, v) in f.values.iter_mut().enumerate() {
        *v = (seed * k as f64).sin();
    }
    f.support_edge = edge;
    f
}

proptest! {
    #[test]
    fn binary_round_trip(seed in -10.0f64..10.0, stride in prop::sample::select(vec![1usize, 2, 4]),
                         edge in prop::option::of(-2.0f64..2.0)) {
        let f = sample_field(seed, stride, edge);
        let back = SpacetimeField::from_bytes(&f.to_bytes()).unwrap();
        prop_assert_eq!(back, f);
    }
}

#[test]
fn header_layout() {
    let f = sample_field(0.3, 2, None);
    let b = f.to_bytes();
    assert_eq!(u64::from_le_bytes(b[0..8].try_into().unwrap()), 5);
    assert_eq!(u64::from_le_bytes(b[8..16].try_into().unwrap()), 5);
    assert_eq!(f64::from_le_bytes(b[40..48].try_into().unwrap()), 0.25);
    assert!(f64::from_le_bytes(b[80..88].try_into().unwrap()).is_nan());
    assert_eq!(b.len(), 88 + 8 * 25);
}

#[test]
fn truncated_payload_is_rejected() {
    let f = sample_field(0.3, 1, None);
    let b = f.to_bytes();
    assert!(matches!(
        SpacetimeField::from_bytes(&b[..b.len() - 8]),
        Err(Error::Format(_))
    ));
}

#[test]
fn csv_has_one_row_per_sample() {
    let f = sample_field(0.7, 1, None);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("field.csv");
    f.write_csv(&path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,r,phi,chi"));
    assert_eq!(lines.count(), f.levels() * f.nodes());
}
