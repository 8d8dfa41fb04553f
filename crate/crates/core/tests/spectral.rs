use std::f64::consts::PI;

use lefschetz_core::geometry::{GroupElement, Scenario};
use lefschetz_core::spectral::{
    heat_character_sum, isotypic_heat_trace, lefschetz_cohomology, rotation_character, supertrace,
};

// Poisson summation: Σ_k e^{-tk²} e^{ikφ} = √(π/t) Σ_m e^{-(φ+2πm)²/4t}
fn theta(phi: f64, t: f64) -> f64 {
    (-20..=20)
        .map(|m| (-(phi + 2.0 * PI * m as f64).powi(2) / (4.0 * t)).exp())
        .sum::<f64>()
        * (PI / t).sqrt()
}

#[test]
fn circle_heat_sum_matches_poisson_dual() {
    for &t in &[0.05, 0.2, 1.0] {
        for &phi in &[0.0, 0.4, 2.5] {
            let (v, tail) = heat_character_sum(Scenario::Circle, 0, &GroupElement::new(vec![phi]), t, 40).unwrap();
            assert!((v.re - theta(phi, t)).abs() < 1e-12 + tail);
            assert!(v.im.abs() < 1e-12);
        }
    }
}

#[test]
fn torus_heat_sum_factorizes() {
    let g = GroupElement::new(vec![0.3, 1.1]);
    let t = 0.1;
    let (v, _) = heat_character_sum(Scenario::Torus2, 1, &g, t, 40).unwrap();
    let expect = 2.0 * theta(0.3, t) * theta(1.1, t);
    assert!((v.re - expect).abs() < 1e-10);
}

#[test]
fn rotation_character_is_dirichlet_kernel() {
    for l in 0..6 {
        for &phi in &[0.3, 1.7, 3.0] {
            let expect = ((l as f64 + 0.5) * phi).sin() / (0.5 * phi).sin();
            assert!((rotation_character(l, phi) - expect).abs() < 1e-12);
        }
    }
}

#[test]
fn supertrace_is_time_independent() {
    for (sc, g) in [
        (Scenario::Circle, vec![0.8]),
        (Scenario::Circle, vec![0.0]),
        (Scenario::Torus2, vec![0.4, 2.0]),
        (Scenario::Sphere2, vec![0.7]),
        (Scenario::Sphere2, vec![0.0]),
    ] {
        let g = GroupElement::new(g);
        let expect = lefschetz_cohomology(sc, &g);
        for &t in &[0.05, 0.3, 2.0] {
            let (v, tail) = supertrace(sc, &g, t).unwrap();
            assert!((v - expect).norm() < 1e-9 + tail, "{sc} t={t}: {v}");
        }
    }
}

#[test]
fn sphere_trace_at_identity_grows_like_area() {
    // Σ (2l+1) e^{-tl(l+1)} = 1/t + 1/3 + O(t)
    let t = 1e-3;
    let (v, _) = heat_character_sum(Scenario::Sphere2, 0, &GroupElement::identity(1), t, 400).unwrap();
    assert!((v.re - 1.0 / t - 1.0 / 3.0).abs() < 1e-2);
}

#[test]
fn isotypic_projection_counts_multiplicities() {
    let (v, _) = isotypic_heat_trace(Scenario::Sphere2, 1, &[3], 0.2, 60).unwrap();
    let expect: f64 = (3..=60).map(|l| 2.0 * (-0.2 * (l * (l + 1)) as f64).exp()).sum();
    assert!((v - expect).abs() < 1e-14);
    let (c, _) = isotypic_heat_trace(Scenario::Circle, 0, &[2], 0.5, 40).unwrap();
    assert!((c - (-2.0f64).exp()).abs() < 1e-15);
}
