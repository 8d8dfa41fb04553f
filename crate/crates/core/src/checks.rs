//! Sampled consistency checks shared by the test suites and the CLI. Each
//! returns the worst deviation seen over its samples.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

use crate::complexes::laplace_symbol;
use crate::error::{Error, Result};
use crate::geometry::{act, momentum, periodic_representative, ChartPoint, GroupElement, Scenario};
use crate::numerics::jet::RealJet;
use crate::oscillatory::{
    critical_chart, phase_eval_grad, phase_jet, transversal_hessian, transversal_hessian_in_frame,
    CriticalChart, PhasePoint,
};
use crate::parametrix::{contour_heat_symbol, heat_symbol, resolvent_recursion, ContourSpec, MAX_LEVEL};

/// A named comparison of an achieved deviation against its tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    pub achieved: f64,
    pub required: f64,
}

impl CheckOutcome {
    pub fn new(name: impl Into<String>, achieved: f64, required: f64) -> Self {
        Self {
            name: name.into(),
            achieved,
            required,
        }
    }

    pub fn pass(&self) -> bool {
        self.achieved.is_finite() && self.achieved <= self.required
    }
}

fn test_function(v: &[RealJet]) -> RealJet {
    // exp(sin x · y) / sqrt(1 + x² + z²) + (1 + y²)^{1.5} cos z
    let (x, y, z) = (&v[0], &v[1], &v[2]);
    let a = (&x.sin() * y).exp();
    let b = (&(x * x) + &(z * z)).add_scalar(1.0).sqrt();
    let c = (y * y).add_scalar(1.0).powf(1.5);
    &(&a / &b) + &(&c * &z.cos())
}

fn value_at(p: &[f64]) -> f64 {
    test_function(&RealJet::variables(p, 0)).value()
}

/// Gradient and Hessian of a composite test function from jets against
/// Richardson-extrapolated central differences; relative error.
pub fn jet_vs_finite_difference<R: Rng>(rng: &mut R, samples: usize) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let p: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let jet = test_function(&RealJet::variables(&p, 2));
        let grad = jet.gradient();
        let hess = jet.hessian();
        let shifted = |i: usize, hi: f64, k: usize, hk: f64| {
            let mut q = p.clone();
            q[i] += hi;
            q[k] += hk;
            value_at(&q)
        };
        let d1 = |i: usize, h: f64| (shifted(i, h, i, 0.0) - shifted(i, -h, i, 0.0)) / (2.0 * h);
        let d2 = |i: usize, k: usize, h: f64| {
            (shifted(i, h, k, h) - shifted(i, h, k, -h) - shifted(i, -h, k, h) + shifted(i, -h, k, -h))
                / (4.0 * h * h)
        };
        let h = 1e-2;
        for i in 0..3 {
            let fd = (4.0 * d1(i, h / 2.0) - d1(i, h)) / 3.0;
            worst = worst.max((grad[i] - fd).abs() / grad[i].abs().max(1.0));
            for k in 0..3 {
                let fd = (4.0 * d2(i, k, h / 2.0) - d2(i, k, h)) / 3.0;
                worst = worst.max((hess[i][k] - fd).abs() / hess[i][k].abs().max(1.0));
            }
        }
    }
    Ok(worst)
}

fn random_sphere_point<R: Rng>(rng: &mut R, max_r: f64) -> Vec<f64> {
    let r = max_r * rng.gen::<f64>().sqrt();
    let th = rng.gen_range(0.0..2.0 * PI);
    vec![r * th.cos(), r * th.sin()]
}

/// Closed-form residues against the contour integral of the resolvent
/// levels on the sphere; error relative to `max(1, |e_k|)`.
pub fn residue_vs_contour<R: Rng>(rng: &mut R, samples: usize) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let chart = rng.gen_range(0..2);
        let x = random_sphere_point(rng, 2.0);
        let xi: Vec<f64> = (0..2).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let t = rng.gen_range(0.05..1.0);
        let symbol = laplace_symbol(Scenario::Sphere2, 0, chart)?;
        let r = resolvent_recursion(&symbol, &x, MAX_LEVEL, MAX_LEVEL)?;
        let p2 = r.p2.eval(&xi).re;
        for level in 0..=MAX_LEVEL {
            let exact = heat_symbol(&r, level, t, &xi)?.value;
            let contour = contour_heat_symbol(&r, level, t, &xi, &ContourSpec::around(p2))?;
            worst = worst.max((exact - contour).norm() / exact.norm().max(1.0));
        }
    }
    Ok(worst)
}

/// `r_k(x, sξ, s²λ) = s^{-2-k} r_k(x, ξ, λ)`; relative error.
pub fn homogeneity<R: Rng>(rng: &mut R, samples: usize) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let chart = rng.gen_range(0..2);
        let x = random_sphere_point(rng, 2.0);
        let xi: Vec<f64> = (0..2).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let s = rng.gen_range(0.5..3.0);
        let symbol = laplace_symbol(Scenario::Sphere2, 0, chart)?;
        let r = resolvent_recursion(&symbol, &x, MAX_LEVEL, MAX_LEVEL)?;
        let p2 = r.p2.eval(&xi).re;
        let lambda = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(0.5..2.0)) * p2.max(0.1);
        let xs: Vec<f64> = xi.iter().map(|v| v * s).collect();
        let p2s = r.p2.eval(&xs).re;
        for (k, level) in r.levels.iter().enumerate() {
            let base = level.eval(&xi, p2, lambda);
            let scaled = level.eval(&xs, p2s, lambda * s * s);
            let expect = base * s.powi(-2 - k as i32);
            worst = worst.max((scaled - expect).norm() / expect.norm().max(1e-300));
        }
    }
    Ok(worst)
}

fn sample_params<R: Rng>(chart: &CriticalChart, rng: &mut R) -> Vec<f64> {
    chart
        .bounds
        .iter()
        .enumerate()
        .map(|(i, &(lo, hi))| {
            let (lo, hi) = (lo.max(-3.0), hi.min(3.0));
            if chart.scenario == Scenario::Sphere2 && i == 0 {
                // stay off the poles
                rng.gen_range(0.2..hi)
            } else {
                rng.gen_range(lo..hi)
            }
        })
        .collect()
}

/// Distance of `(x, ξ, g)` from `{J = 0} ∩ {g·(x, ξ) = (x, ξ)}`.
pub fn fixed_point_residual(scenario: Scenario, p: &PhasePoint) -> Result<f64> {
    let point = ChartPoint::new(p.chart, p.x.clone());
    let g = GroupElement::new(p.angles.clone());
    let (image, dg) = act(scenario, &g, &point)?;
    let mut worst: f64 = 0.0;
    for (a, b) in image.coords.iter().zip(&p.x) {
        let d = if scenario.is_flat() {
            periodic_representative(a - b)
        } else {
            a - b
        };
        worst = worst.max(d.abs());
    }
    // g acts on covectors by (dg⁻¹)ᵀ; fixed iff dgᵀ ξ = ξ
    let xi = DVector::from_column_slice(&p.xi);
    worst = worst.max((dg.transpose() * &xi - &xi).amax());
    for m in momentum(scenario, &point, &p.xi)? {
        worst = worst.max(m.abs());
    }
    Ok(worst)
}

/// Gradient zeros of Φ polished from random seeds lie on the fixed-point
/// set of the zero momentum level, and points of that set (regular and
/// singular) are gradient zeros.
pub fn critical_set_equivalence<R: Rng>(scenario: Scenario, rng: &mut R, samples: usize) -> Result<f64> {
    let n = scenario.dim();
    let d = scenario.group_dim();
    let mut worst: f64 = 0.0;
    let mut converged = 0;
    for _ in 0..samples {
        let chart = rng.gen_range(0..scenario.chart_count());
        let x = if scenario.is_flat() {
            (0..n).map(|_| rng.gen_range(0.0..2.0 * PI)).collect()
        } else {
            random_sphere_point(rng, 2.0)
        };
        let mut v: Vec<f64> = x;
        v.extend((0..n).map(|_| rng.gen_range(-1.0..1.0)));
        v.extend((0..d).map(|_| rng.gen_range(-0.3..0.3)));
        let mut ok = false;
        for _ in 0..60 {
            let p = PhasePoint::from_ambient(scenario, chart, &v);
            let jet = phase_jet(scenario, &p, 2)?;
            let g = DVector::from_vec(jet.gradient());
            if g.amax() < 1e-13 {
                ok = true;
                break;
            }
            let h = DMatrix::from_vec(v.len(), v.len(), jet.hessian().into_iter().flatten().collect());
            let step = h
                .pseudo_inverse(1e-10)
                .map_err(|e| Error::InvalidInput(e.to_string()))?
                * g;
            for (a, s) in v.iter_mut().zip(step.iter()) {
                *a -= s;
            }
        }
        if ok {
            converged += 1;
            let p = PhasePoint::from_ambient(scenario, chart, &v);
            worst = worst.max(fixed_point_residual(scenario, &p)?);
        }
    }
    if converged * 2 < samples {
        return Err(Error::TooFewSamples {
            required: samples.div_ceil(2),
            got: converged,
        });
    }
    // converse: parametrized regular points and the singular stratum
    let set = critical_chart(scenario);
    for _ in 0..samples {
        let chart = &set.charts[rng.gen_range(0..set.charts.len())];
        let p = chart.point(&sample_params(chart, rng));
        worst = worst.max(fixed_point_residual(scenario, &p)?);
        worst = worst.max(phase_eval_grad(scenario, &p)?.1.iter().fold(0.0, |m, v| m.max(v.abs())));
        if scenario == Scenario::Sphere2 {
            let pole = vec![0.0, 0.0];
            let xi: Vec<f64> = (0..2).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let singular = [
                PhasePoint {
                    chart: chart.chart,
                    x: pole.clone(),
                    xi,
                    angles: vec![0.0],
                },
                PhasePoint {
                    chart: chart.chart,
                    x: pole,
                    xi: vec![0.0, 0.0],
                    angles: vec![rng.gen_range(0.0..2.0 * PI)],
                },
            ];
            for p in &singular {
                worst = worst.max(fixed_point_residual(scenario, p)?);
                worst = worst.max(phase_eval_grad(scenario, p)?.1.iter().fold(0.0, |m, v| m.max(v.abs())));
            }
        }
    }
    Ok(worst)
}

fn random_orthogonal<R: Rng>(rng: &mut R, k: usize) -> DMatrix<f64> {
    let m = DMatrix::from_fn(k, k, |_, _| rng.gen_range(-1.0..1.0));
    m.qr().q()
}

/// `|det Φ''|_N|` under random orthonormal changes of the normal frame;
/// relative deviation.
pub fn hessian_frame_independence<R: Rng>(scenario: Scenario, rng: &mut R, samples: usize) -> Result<f64> {
    let set = critical_chart(scenario);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let chart = &set.charts[rng.gen_range(0..set.charts.len())];
        let params = sample_params(chart, rng);
        let base = transversal_hessian(chart, &params, 0.1)?;
        let frame = chart.normal_frame(&params);
        let q = random_orthogonal(rng, frame.ncols());
        let other = transversal_hessian_in_frame(chart, &params, 0.1, &(frame * q))?;
        worst = worst.max((other.abs_det - base.abs_det).abs() / base.abs_det);
    }
    Ok(worst)
}

/// Largest `|σ|` of the transversal Hessian over sampled regular points.
pub fn max_abs_signature<R: Rng>(scenario: Scenario, rng: &mut R, samples: usize) -> Result<f64> {
    let set = critical_chart(scenario);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let chart = &set.charts[rng.gen_range(0..set.charts.len())];
        let h = transversal_hessian(chart, &sample_params(chart, rng), 0.1)?;
        worst = worst.max(h.signature.abs() as f64);
    }
    Ok(worst)
}

/// The property suite at its pinned tolerances.
pub fn property_suite<R: Rng>(rng: &mut R) -> Result<Vec<CheckOutcome>> {
    let mut out = vec![
        CheckOutcome::new("jet-vs-finite-difference", jet_vs_finite_difference(rng, 50)?, 1e-5),
        CheckOutcome::new("residue-vs-contour", residue_vs_contour(rng, 20)?, 1e-10),
        CheckOutcome::new("homogeneity", homogeneity(rng, 20)?, 1e-12),
    ];
    for sc in Scenario::ALL {
        out.push(CheckOutcome::new(
            format!("critical-set-equivalence-{sc}"),
            critical_set_equivalence(sc, rng, 40)?,
            1e-8,
        ));
        out.push(CheckOutcome::new(
            format!("hessian-frame-independence-{sc}"),
            hessian_frame_independence(sc, rng, 40)?,
            1e-10,
        ));
        out.push(CheckOutcome::new(
            format!("signature-zero-{sc}"),
            max_abs_signature(sc, rng, 40)?,
            0.0,
        ));
    }
    Ok(out)
}
