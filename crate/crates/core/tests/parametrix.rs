use lefschetz_core::checks::{homogeneity, residue_vs_contour};
use lefschetz_core::complexes::laplace_symbol;
use lefschetz_core::geometry::{GroupElement, Scenario};
use lefschetz_core::parametrix::{
    equivariant_trace_parametrix, heat_symbol, resolvent_recursion, SphereTraceEngine, TraceOptions,
};
use lefschetz_core::spectral::heat_character_sum;
use lefschetz_core::Error;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn sphere_p2(coords: [f64; 2], xi: [f64; 2]) -> f64 {
    let r2 = coords[0] * coords[0] + coords[1] * coords[1];
    (1.0 + r2).powi(2) / 4.0 * (xi[0] * xi[0] + xi[1] * xi[1])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn contour_agrees_with_residues(seed in any::<u64>()) {
        let worst = residue_vs_contour(&mut ChaCha8Rng::seed_from_u64(seed), 4).unwrap();
        prop_assert!(worst < 1e-10, "{worst:e}");
    }

    #[test]
    fn heat_symbols_are_homogeneous(seed in any::<u64>()) {
        let worst = homogeneity(&mut ChaCha8Rng::seed_from_u64(seed), 4).unwrap();
        prop_assert!(worst < 1e-12, "{worst:e}");
    }

    #[test]
    fn first_level_matches_finite_differences(
        x in -1.2f64..1.2, y in -1.2f64..1.2,
        a in -2.0f64..2.0, b in -2.0f64..2.0,
        lr in -3.0f64..0.5, li in -2.0f64..2.0,
    ) {
        // r₁ = -i Σ_l ∂_{ξ_l}p₂ ∂_{x_l}p₂ / (p₂ - λ)³ when p₁ = p₀ = 0
        let sym = laplace_symbol(Scenario::Sphere2, 0, 0).unwrap();
        let r = resolvent_recursion(&sym, &[x, y], 1, 2).unwrap();
        let p2 = sphere_p2([x, y], [a, b]);
        let lambda = Complex64::new(lr, li);
        let h = 1e-5;
        let dx = [
            (sphere_p2([x + h, y], [a, b]) - sphere_p2([x - h, y], [a, b])) / (2.0 * h),
            (sphere_p2([x, y + h], [a, b]) - sphere_p2([x, y - h], [a, b])) / (2.0 * h),
        ];
        let dxi = [
            (sphere_p2([x, y], [a + h, b]) - sphere_p2([x, y], [a - h, b])) / (2.0 * h),
            (sphere_p2([x, y], [a, b + h]) - sphere_p2([x, y], [a, b - h])) / (2.0 * h),
        ];
        let s = dx[0] * dxi[0] + dx[1] * dxi[1];
        let u = Complex64::new(p2, 0.0) - lambda;
        let expect = Complex64::new(0.0, -s) / (u * u * u);
        let got = r.levels[1].eval(&[a, b], p2, lambda);
        prop_assert!((got - expect).norm() < 1e-7 * (1.0 + expect.norm()), "{got} vs {expect}");

        // residue: A/(p₂-λ)³ ↦ A t²/2 e^{-tp₂}
        let t = 0.4;
        let e1 = heat_symbol(&r, 1, t, &[a, b]).unwrap().value;
        let expect = Complex64::new(0.0, -s) * t * t / 2.0 * (-t * p2).exp();
        prop_assert!((e1 - expect).norm() < 1e-7 * (1.0 + expect.norm()));
    }
}

#[test]
fn level_zero_is_the_heat_kernel_symbol() {
    let sym = laplace_symbol(Scenario::Sphere2, 0, 1).unwrap();
    let r = resolvent_recursion(&sym, &[0.3, 0.1], 2, 2).unwrap();
    let xi = [0.7, -1.1];
    let p2 = sphere_p2([0.3, 0.1], xi);
    let e0 = heat_symbol(&r, 0, 0.9, &xi).unwrap().value;
    assert!((e0.re - (-0.9 * p2).exp()).abs() < 1e-15);
}

#[test]
fn recursion_rejects_short_jets() {
    let sym = laplace_symbol(Scenario::Sphere2, 0, 0).unwrap();
    assert!(matches!(
        resolvent_recursion(&sym, &[0.1, 0.2], 2, 1),
        Err(Error::JetOrderExhausted { .. })
    ));
    assert!(resolvent_recursion(&sym, &[0.1, 0.2], 3, 3).is_err());
}

#[test]
fn flat_parametrix_is_the_principal_image() {
    // the chart-local kernel sees only the image with |φ| ≤ π; the others
    // are e^{-(2π-|φ|)²/4t} and vanish to all orders in t
    for &t in &[0.05, 0.1, 0.3] {
        for &phi in &[0.0f64, 1.0, 2.5] {
            let g = GroupElement::new(vec![phi]);
            let p = equivariant_trace_parametrix(Scenario::Circle, 0, &g, t, 0).unwrap();
            let principal = (std::f64::consts::PI / t).sqrt() * (-phi * phi / (4.0 * t)).exp();
            assert!((p.value.re - principal).abs() < 1e-9 * principal.max(1.0), "t={t} φ={phi}: {}", p.value);
            if t <= 0.1 {
                let (s, _) = heat_character_sum(Scenario::Circle, 0, &g, t, 40).unwrap();
                assert!((p.value - s).norm() < 1e-6);
            }
        }
    }
    let g = GroupElement::new(vec![0.4, 1.0]);
    let p = equivariant_trace_parametrix(Scenario::Torus2, 1, &g, 0.1, 0).unwrap();
    let (s, _) = heat_character_sum(Scenario::Torus2, 1, &g, 0.1, 40).unwrap();
    assert!((p.value - s).norm() < 1e-6);
}

#[test]
fn sphere_parametrix_tracks_spectrum_at_small_time() {
    let engine = SphereTraceEngine::new(0, &TraceOptions::for_scenario(Scenario::Sphere2)).unwrap();
    let ts = [0.01, 0.02];
    for phi in [0.0, 0.9] {
        let g = GroupElement::new(vec![phi]);
        let v = engine.trace(&g, &ts).unwrap();
        for (i, &t) in ts.iter().enumerate() {
            let (s, _) = heat_character_sum(Scenario::Sphere2, 0, &g, t, 60).unwrap();
            assert!((v[i] - s).norm() < 1e-2 * s.norm().max(1.0), "φ={phi} t={t}: {} vs {}", v[i], s);
        }
    }
}
