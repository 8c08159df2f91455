use radwave_core::quadrature::*;

#[test]
fn simpson_is_exact_for_cubics_even_and_odd_counts() {
    for n in [3usize, 4, 5, 6, 9, 10] {
        let h = 1.0 / (n - 1) as f64;
        let v: Vec<f64> = (0..n)
            .map(|i| {
                let x = i as f64 * h;
                x * x * x - 2.0 * x + 1.0
            })
            .collect();
        let exact = 0.25 - 1.0 + 1.0;
        assert!((simpson(&v, h) - exact).abs() < 1e-14, "n = {n}");
    }
}

#[test]
fn gauss_legendre_integrates_high_degree_polynomials() {
    let gl = GaussLegendre::new(8);
    let sum: f64 = gl.weights.iter().sum();
    assert!((sum - 2.0).abs() < 1e-14);
    // degree 15 is exact for 8 nodes
    let val = gl.integrate(0.0, 2.0, |x| x.powi(15));
    assert!((val - 2f64.powi(16) / 16.0).abs() < 1e-9);
}

#[test]
fn trapezoid_on_linear() {
    let v = [0.0, 1.0, 2.0];
    assert_eq!(trapezoid(&v, 0.5), 1.0);
}
