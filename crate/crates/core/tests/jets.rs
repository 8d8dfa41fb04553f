use lefschetz_core::numerics::jet::RealJet;
use proptest::prelude::*;

// f(x, y) = exp(x³ - 2xy + y²/3)
fn cubic(x: f64, y: f64) -> f64 {
    x.powi(3) - 2.0 * x * y + y * y / 3.0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn exp_of_cubic_matches_closed_form(x in -1.5f64..1.5, y in -1.5f64..1.5) {
        let v = RealJet::variables(&[x, y], 2);
        let c = &(&(&(&v[0] * &v[0]) * &v[0]) - &(&v[0] * &v[1]).scale(2.0)) + &(&v[1] * &v[1]).scale(1.0 / 3.0);
        let f = c.exp();
        let e = cubic(x, y).exp();
        let (cx, cy) = (3.0 * x * x - 2.0 * y, -2.0 * x + 2.0 * y / 3.0);
        let (cxx, cxy, cyy) = (6.0 * x, -2.0, 2.0 / 3.0);
        let tol = 1e-12 * e.max(1.0);
        prop_assert!((f.value() - e).abs() < tol);
        prop_assert!((f.partial(&[1, 0]) - e * cx).abs() < 1e-11 * e.max(1.0));
        prop_assert!((f.partial(&[0, 1]) - e * cy).abs() < 1e-11 * e.max(1.0));
        prop_assert!((f.partial(&[2, 0]) - e * (cxx + cx * cx)).abs() < 1e-10 * e.max(1.0));
        prop_assert!((f.partial(&[1, 1]) - e * (cxy + cx * cy)).abs() < 1e-10 * e.max(1.0));
        prop_assert!((f.partial(&[0, 2]) - e * (cyy + cy * cy)).abs() < 1e-10 * e.max(1.0));
    }

    #[test]
    fn gradient_matches_central_differences(x in -1.0f64..1.0, y in -1.0f64..1.0) {
        let v = RealJet::variables(&[x, y], 1);
        let f = (&(&v[0].sin() * &v[1]).exp() / &(&v[0] * &v[0]).add_scalar(1.0).sqrt()).powi(2);
        let scalar = |x: f64, y: f64| ((x.sin() * y).exp() / (1.0 + x * x).sqrt()).powi(2);
        let h = 1e-5;
        let fd = [
            (scalar(x + h, y) - scalar(x - h, y)) / (2.0 * h),
            (scalar(x, y + h) - scalar(x, y - h)) / (2.0 * h),
        ];
        let g = f.gradient();
        for i in 0..2 {
            prop_assert!((g[i] - fd[i]).abs() < 1e-7 * (1.0 + fd[i].abs()));
        }
    }
}

#[test]
fn truncation_keeps_lower_coefficients() {
    let v = RealJet::variables(&[0.3, -0.2], 4);
    let f = (&v[0] * &v[1]).exp();
    let t = f.truncate(2);
    assert_eq!(t.order(), 2);
    assert_eq!(t.partial(&[1, 1]), f.partial(&[1, 1]));
}
