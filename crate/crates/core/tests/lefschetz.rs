use std::f64::consts::PI;

use lefschetz_core::geometry::{GroupElement, Scenario};
use lefschetz_core::lefschetz::{
    atiyah_bott, equivariant_lefschetz, lefschetz_heat, main_theorem_constant_term,
    ConstantTermMode, EquivariantMethod, HeatMethod, Method,
};
use lefschetz_core::spectral::lefschetz_cohomology;

#[test]
fn sphere_heat_spectral_gives_two() {
    let r = lefschetz_heat(Scenario::Sphere2, &GroupElement::new(vec![0.7]), 0.3, HeatMethod::Spectral).unwrap();
    assert!((r.value.re - 2.0).abs() < 1e-10);
    assert!((r.breakdown_sum() - r.value).norm() < 1e-12);
}

#[test]
fn circle_parametrix_vanishes() {
    let r = lefschetz_heat(Scenario::Circle, &GroupElement::new(vec![1.0]), 0.05, HeatMethod::Parametrix).unwrap();
    assert!(r.value.norm() < 2e-4);
    assert!(r.degrees.iter().all(|d| d.method == Method::HeatParametrix));
    assert!(r.degrees[0].value.norm() > 0.01);
}

#[test]
fn heat_methods_agree_with_fixed_points() {
    for phi in [0.4, 1.3, 2.9, -2.0] {
        let g = GroupElement::new(vec![phi]);
        let fp = atiyah_bott(Scenario::Sphere2, &g).unwrap();
        for t in [0.1, 0.5, 1.5] {
            let h = lefschetz_heat(Scenario::Sphere2, &g, t, HeatMethod::Spectral).unwrap();
            assert!((h.value - fp.value).norm() < 1e-8, "φ={phi} t={t}");
        }
        assert!((fp.value - lefschetz_cohomology(Scenario::Sphere2, &g)).norm() < 1e-12);
        assert!((fp.breakdown_sum() - fp.value).norm() < 1e-12);
    }
}

#[test]
fn torus_heat_is_time_independent() {
    let g = GroupElement::new(vec![0.3, 2.2]);
    let values: Vec<f64> = [0.05, 0.2, 0.8]
        .iter()
        .map(|&t| lefschetz_heat(Scenario::Torus2, &g, t, HeatMethod::Spectral).unwrap().value.norm())
        .collect();
    assert!(values.iter().all(|v| *v < 1e-9), "{values:?}");
}

#[test]
fn equivariant_methods_agree() {
    for k in -2..=2i64 {
        let expect = if k == 0 { 2.0 } else { 0.0 };
        for m in [
            EquivariantMethod::Cohomology,
            EquivariantMethod::HeatSpectral { t: 0.4 },
            EquivariantMethod::HeatSpectral { t: 1.2 },
            EquivariantMethod::FixedPoint { nodes: 32 },
        ] {
            let r = equivariant_lefschetz(Scenario::Sphere2, &[k], m).unwrap();
            assert!((r.value.re - expect).abs() < 1e-8, "k={k} {m:?}: {}", r.value);
            assert!((r.breakdown_sum() - r.value).norm() < 1e-12);
        }
    }
}

#[test]
fn flat_constant_terms_cancel_across_degrees() {
    let r = main_theorem_constant_term(Scenario::Torus2, &[1, -2], &ConstantTermMode::Exact, &[]).unwrap();
    let per: Vec<f64> = r.degrees.iter().map(|d| d.value.re).collect();
    assert_eq!(per.len(), 3);
    for (j, v) in per.iter().enumerate() {
        let binom = [1.0, 2.0, 1.0][j];
        assert!((v - binom).abs() < 1e-8, "degree {j}: {v}");
    }
    assert!(r.value.norm() < 1e-8);
    assert!((r.breakdown_sum() - r.value).norm() < 1e-12);
}

#[test]
fn fixed_point_sum_is_a_sum_over_poles() {
    // each pole contributes 1 / det(1 - dg) summed against Λ(dgᵀ)
    let phi: f64 = 1.1;
    let g = GroupElement::new(vec![phi]);
    let r = atiyah_bott(Scenario::Sphere2, &g).unwrap();
    let det = 2.0 - 2.0 * phi.cos();
    let per_pole = [1.0 / det, 2.0 * phi.cos() / det, 1.0 / det];
    for d in &r.degrees {
        assert!((d.value.re - 2.0 * per_pole[d.degree]).abs() < 1e-12);
    }
    let _ = PI;
}
