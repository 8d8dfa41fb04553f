use std::f64::consts::PI;

use lefschetz_core::geometry::{act, momentum, ChartPoint, GroupElement, ModelGeometry, Scenario};
use lefschetz_core::oscillatory::{phase_eval_grad, PhasePoint};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_point(sc: Scenario, rng: &mut ChaCha8Rng) -> ChartPoint {
    match sc {
        Scenario::Sphere2 => {
            let r = rng.gen_range(0.0..2.0f64);
            let a = rng.gen_range(0.0..2.0 * PI);
            ChartPoint::new(rng.gen_range(0..2), vec![r * a.cos(), r * a.sin()])
        }
        _ => ChartPoint::new(0, (0..sc.dim()).map(|_| rng.gen_range(0.0..2.0 * PI)).collect()),
    }
}

fn random_element(sc: Scenario, rng: &mut ChaCha8Rng) -> GroupElement {
    GroupElement::new((0..sc.group_dim()).map(|_| rng.gen_range(-PI..PI)).collect())
}

#[test]
fn actions_are_isometries() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for sc in [Scenario::Circle, Scenario::Torus2, Scenario::Sphere2] {
        let geo = ModelGeometry::new(sc);
        for _ in 0..100 {
            let p = random_point(sc, &mut rng);
            let g = random_element(sc, &mut rng);
            let (gp, dg) = act(sc, &g, &p).unwrap();
            let chart = geo.chart(p.chart).unwrap();
            let pulled = dg.transpose() * chart.metric(&gp.coords).unwrap() * &dg;
            let diff = (pulled - chart.metric(&p.coords).unwrap()).amax();
            assert!(diff < 1e-12, "{sc}: metric not preserved ({diff:e})");
        }
    }
}

#[test]
fn sphere_partition_of_unity_with_derivatives() {
    let geo = ModelGeometry::new(Scenario::Sphere2);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..200 {
        let r = rng.gen_range(0.26..3.8f64);
        let a = rng.gen_range(0.0..2.0 * PI);
        let p = ChartPoint::new(0, vec![r * a.cos(), r * a.sin()]);
        let (q, jac) = geo.transition_with_jacobian(&p, 1).unwrap();
        let f0 = geo.charts[0].partition_jet(&p.coords, 1).unwrap();
        let f1 = geo.charts[1].partition_jet(&q.coords, 1).unwrap();
        assert!((f0.value() + f1.value() - 1.0).abs() < 1e-14);
        let g1 = jac.transpose() * nalgebra::DVector::from_vec(f1.gradient());
        for i in 0..2 {
            assert!((f0.gradient()[i] + g1[i]).abs() < 1e-12);
        }
    }
}

#[test]
fn cutoff_is_one_on_partition_support() {
    let geo = ModelGeometry::new(Scenario::Sphere2);
    let c = &geo.charts[0];
    let inner = c.partition_support_radius().unwrap();
    for i in 0..50 {
        let r = inner * i as f64 / 49.0;
        assert_eq!(c.cutoff(&[r, 0.0]), 1.0);
    }
    assert_eq!(c.cutoff(&[c.cutoff_support_radius().unwrap() + 1e-9, 0.0]), 0.0);
}

#[test]
fn momentum_is_group_derivative_of_phase() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for sc in [Scenario::Circle, Scenario::Torus2, Scenario::Sphere2] {
        let n = sc.dim();
        for _ in 0..50 {
            let p = random_point(sc, &mut rng);
            let xi: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let pp = PhasePoint {
                chart: p.chart,
                x: p.coords.clone(),
                xi: xi.clone(),
                angles: vec![0.0; sc.group_dim()],
            };
            let (_, grad) = phase_eval_grad(sc, &pp).unwrap();
            let j = momentum(sc, &p, &xi).unwrap();
            for a in 0..sc.group_dim() {
                assert!((grad[2 * n + a] - j[a]).abs() < 1e-8);
            }
        }
    }
}

#[test]
fn embedding_round_trip() {
    let geo = ModelGeometry::new(Scenario::Sphere2);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..100 {
        let p = random_point(Scenario::Sphere2, &mut rng);
        let q = geo.locate(geo.embed(&p).unwrap()).unwrap();
        let back = geo.transition(&q, p.chart).unwrap_or(q.clone());
        if back.chart == p.chart {
            for i in 0..2 {
                assert!((back.coords[i] - p.coords[i]).abs() < 1e-12);
            }
        }
    }
}
