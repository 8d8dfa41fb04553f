use std::f64::consts::PI;

use lefschetz_core::checks::{critical_set_equivalence, max_abs_signature};
use lefschetz_core::geometry::Scenario;
use lefschetz_core::oscillatory::{
    circle_test_amplitude, critical_chart, leading_coefficient, oscillatory_integral,
    phase_eval_grad, sphere_heat_amplitude, transversal_hessian, Amplitude, GaussianFactor,
    LeadingOptions, OscillatoryMethod, OscillatoryOptions, PhasePoint,
};
use lefschetz_core::Error;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_phase_point(sc: Scenario, rng: &mut ChaCha8Rng) -> PhasePoint {
    let n = sc.dim();
    let x = match sc {
        Scenario::Sphere2 => vec![rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)],
        _ => (0..n).map(|_| rng.gen_range(0.5..5.5)).collect(),
    };
    PhasePoint {
        chart: 0,
        x,
        xi: (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect(),
        angles: (0..sc.group_dim()).map(|_| rng.gen_range(-2.5..2.5)).collect(),
    }
}

#[test]
fn phase_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for sc in [Scenario::Circle, Scenario::Torus2, Scenario::Sphere2] {
        for _ in 0..100 {
            let p = random_phase_point(sc, &mut rng);
            let (_, grad) = phase_eval_grad(sc, &p).unwrap();
            let v = p.ambient();
            let h = 1e-5;
            for i in 0..v.len() {
                let shifted = |d: f64| {
                    let mut w = v.clone();
                    w[i] += d;
                    phase_eval_grad(sc, &PhasePoint::from_ambient(sc, 0, &w)).unwrap().0
                };
                let fd = (shifted(h) - shifted(-h)) / (2.0 * h);
                assert!((fd - grad[i]).abs() < 1e-7 * (1.0 + fd.abs()), "{sc} axis {i}: {fd} vs {}", grad[i]);
            }
        }
    }
}

#[test]
fn phase_is_stationary_on_the_critical_charts() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for sc in [Scenario::Circle, Scenario::Torus2, Scenario::Sphere2] {
        for chart in &critical_chart(sc).charts {
            for _ in 0..100 {
                let params: Vec<f64> = chart
                    .bounds
                    .iter()
                    .map(|&(lo, hi)| rng.gen_range(lo.max(-5.0)..hi.min(5.0)))
                    .collect();
                let (_, grad) = phase_eval_grad(sc, &chart.point(&params)).unwrap();
                let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
                assert!(norm < 1e-12, "{sc}: |∇Φ| = {norm:e}");
            }
        }
    }
}

#[test]
fn critical_set_matches_its_parametrization() {
    for sc in [Scenario::Circle, Scenario::Torus2, Scenario::Sphere2] {
        let worst = critical_set_equivalence(sc, &mut ChaCha8Rng::seed_from_u64(13), 60).unwrap();
        assert!(worst < 1e-8, "{sc}: {worst:e}");
    }
}

#[test]
fn transversal_signature_vanishes() {
    for sc in [Scenario::Circle, Scenario::Torus2, Scenario::Sphere2] {
        assert_eq!(max_abs_signature(sc, &mut ChaCha8Rng::seed_from_u64(14), 60).unwrap(), 0.0);
    }
}

#[test]
fn sphere_hessian_refused_at_the_pole() {
    let chart = &critical_chart(Scenario::Sphere2).charts[0];
    assert!(matches!(
        transversal_hessian(chart, &[0.0, 0.3, 0.0], 1e-6),
        Err(Error::TooCloseToSingular { .. })
    ));
    let h = transversal_hessian(chart, &[0.5, 0.3, 1.2], 1e-6).unwrap();
    assert!((h.abs_det - (0.25 + 1.44)).abs() < 1e-12);
}

// ∫∫∫ e^{iφξ/μ} e^{-ξ²} cos²(φ/2)(1 + 0.3 sin x) = 2π√π ∫ cos²(φ/2) e^{-φ²/4μ²} dφ
//                                                 = 2π² μ (1 + e^{-μ²}) up to e^{-π²/4μ²}
fn circle_closed_form(mu: f64) -> f64 {
    2.0 * PI * PI * mu * (1.0 + (-mu * mu).exp())
}

#[test]
fn circle_integral_matches_closed_form() {
    let mu = 0.1;
    let opts = OscillatoryOptions::default();
    let reduced = oscillatory_integral(&circle_test_amplitude(), mu, OscillatoryMethod::Reduced, &opts).unwrap();
    assert!((reduced.value.re - circle_closed_form(mu)).abs() < 1e-6);
    assert!(reduced.value.im.abs() < 1e-10);
    let general = Amplitude::general(Scenario::Circle, "circle-general", |p| {
        Complex64::new(
            (-p.xi[0] * p.xi[0]).exp() * (0.5 * p.angles[0]).cos().powi(2) * (1.0 + 0.3 * p.x[0].sin()),
            0.0,
        )
    });
    let direct = oscillatory_integral(&general, mu, OscillatoryMethod::Direct, &opts).unwrap();
    assert_eq!(direct.method, OscillatoryMethod::Direct);
    assert!((direct.value.re - circle_closed_form(mu)).abs() < 1e-6, "{}", direct.value);
}

fn bump(u: f64) -> f64 {
    if u <= 0.0 || u >= 1.0 {
        0.0
    } else {
        (-1.0 / u - 1.0 / (1.0 - u)).exp()
    }
}

#[test]
fn non_stationary_amplitude_decays_fast() {
    // supported where φ ∈ (0.5, 2.5), away from the identity
    let amp = Amplitude::gaussian(Scenario::Circle, "off-identity", |_, _, a| GaussianFactor {
        prefactor: Complex64::new(bump((a[0] - 0.5) / 2.0), 0.0),
        form: DMatrix::identity(1, 1),
    });
    let opts = OscillatoryOptions::default();
    let i1 = oscillatory_integral(&amp, 0.1, OscillatoryMethod::Auto, &opts).unwrap().value.norm();
    let i2 = oscillatory_integral(&amp, 0.05, OscillatoryMethod::Auto, &opts).unwrap().value.norm();
    assert!(i1 < 1e-3);
    assert!(i2 < i1 * 0.5f64.powi(3), "{i1:e} {i2:e}");
}

#[test]
fn zero_amplitude_gives_zero() {
    for sc in [Scenario::Circle, Scenario::Sphere2] {
        let v = oscillatory_integral(&Amplitude::zero(sc), 0.2, OscillatoryMethod::Auto, &OscillatoryOptions::lean()).unwrap();
        assert_eq!(v.value, Complex64::new(0.0, 0.0));
    }
}

#[test]
fn sphere_leading_coefficient_and_collar() {
    let l0 = leading_coefficient(&sphere_heat_amplitude(), &LeadingOptions::default()).unwrap();
    // the spectral t^{-1/2} coefficient of the trivial isotypic trace is √π/2
    let expect = 4.0 * PI * PI * PI.sqrt() / 2.0;
    assert!((l0.value.re - expect).abs() < 1e-8 * expect, "{} vs {expect}", l0.value);
    let steps: Vec<f64> = l0
        .collar_values
        .windows(2)
        .map(|w| (w[1].1 - w[0].1).norm())
        .collect();
    assert!(steps.windows(2).all(|s| s[1] < s[0]), "{steps:?}");
    assert!(l0.error_estimate < 1e-6);
}
