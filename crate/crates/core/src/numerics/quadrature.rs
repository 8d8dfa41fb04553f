//! Tensor-product quadrature with node-doubling error estimates.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// One axis of a product rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Axis {
    /// Trapezoid rule on `[start, start + period)` for periodic integrands.
    Periodic { start: f64, period: f64, nodes: usize },
    /// Gauss–Legendre on a compact interval.
    Legendre { lower: f64, upper: f64, nodes: usize },
    /// Trapezoid on `[-radius, radius]` for integrands with Gaussian decay on ℝ.
    FullLine { radius: f64, nodes: usize },
    /// Gauss–Legendre on `[0, radius]` for integrands decaying on the half line.
    HalfLine { radius: f64, nodes: usize },
}

impl Axis {
    pub fn nodes(&self) -> usize {
        match *self {
            Axis::Periodic { nodes, .. }
            | Axis::Legendre { nodes, .. }
            | Axis::FullLine { nodes, .. }
            | Axis::HalfLine { nodes, .. } => nodes,
        }
    }

    pub fn with_nodes(&self, n: usize) -> Axis {
        let mut axis = *self;
        match &mut axis {
            Axis::Periodic { nodes, .. }
            | Axis::Legendre { nodes, .. }
            | Axis::FullLine { nodes, .. }
            | Axis::HalfLine { nodes, .. } => *nodes = n,
        }
        axis
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes() < 2 {
            return Err(Error::InvalidInput(format!(
                "axis {self:?} needs at least 2 nodes"
            )));
        }
        let ok = match *self {
            Axis::Periodic { start, period, .. } => start.is_finite() && period > 0.0,
            Axis::Legendre { lower, upper, .. } => {
                lower.is_finite() && upper.is_finite() && upper > lower
            }
            Axis::FullLine { radius, .. } | Axis::HalfLine { radius, .. } => {
                radius.is_finite() && radius > 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("invalid axis bounds in {self:?}")))
        }
    }

    /// Nodes and weights of this axis.
    pub fn rule(&self) -> (Vec<f64>, Vec<f64>) {
        match *self {
            Axis::Periodic {
                start,
                period,
                nodes,
            } => {
                let h = period / nodes as f64;
                ((0..nodes).map(|i| start + h * i as f64).collect(), vec![h; nodes])
            }
            Axis::Legendre {
                lower,
                upper,
                nodes,
            } => legendre_on(lower, upper, nodes),
            Axis::HalfLine { radius, nodes } => legendre_on(0.0, radius, nodes),
            Axis::FullLine { radius, nodes } => {
                let h = 2.0 * radius / (nodes - 1) as f64;
                let x = (0..nodes).map(|i| -radius + h * i as f64).collect();
                let mut w = vec![h; nodes];
                w[0] *= 0.5;
                w[nodes - 1] *= 0.5;
                (x, w)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureSpec {
    pub axes: Vec<Axis>,
    /// Absolute tolerance for the node-doubling error estimate.
    pub tolerance: f64,
    /// How many times the node counts may be doubled before giving up.
    pub max_doublings: usize,
}

impl QuadratureSpec {
    pub fn new(axes: Vec<Axis>, tolerance: f64) -> Self {
        Self {
            axes,
            tolerance,
            max_doublings: 3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.axes.is_empty() {
            return Err(Error::InvalidInput("quadrature needs at least one axis".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidInput(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        self.axes.iter().try_for_each(Axis::validate)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: Complex64,
    pub error_estimate: f64,
    pub converged: bool,
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> Arc<(Vec<f64>, Vec<f64>)> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<(Vec<f64>, Vec<f64>)>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("gauss-legendre cache poisoned");
    guard
        .entry(n)
        .or_insert_with(|| Arc::new(compute_gauss_legendre(n)))
        .clone()
}

fn compute_gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess, then Newton on P_n
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        dp = if d != 0.0 { d } else { dp };
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

fn legendre_on(a: f64, b: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let gl = gauss_legendre(n);
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    (
        gl.0.iter().map(|&z| mid + half * z).collect(),
        gl.1.iter().map(|&w| half * w).collect(),
    )
}

/// One tensor-product evaluation, no refinement.
pub fn integrate_fixed<F>(f: &F, axes: &[Axis]) -> Result<Complex64>
where
    F: Fn(&[f64]) -> Complex64,
{
    let rules: Vec<(Vec<f64>, Vec<f64>)> = axes.iter().map(Axis::rule).collect();
    let dim = rules.len();
    let mut idx = vec![0usize; dim];
    let mut point: Vec<f64> = rules.iter().map(|r| r.0[0]).collect();
    let mut total = Complex64::new(0.0, 0.0);
    loop {
        let mut w = 1.0;
        for (d, &i) in idx.iter().enumerate() {
            point[d] = rules[d].0[i];
            w *= rules[d].1[i];
        }
        let v = f(&point);
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::NonFinite {
                location: point.clone(),
            });
        }
        total += v * w;
        // odometer, last axis fastest
        let mut d = dim;
        loop {
            if d == 0 {
                return Ok(total);
            }
            d -= 1;
            idx[d] += 1;
            if idx[d] < rules[d].0.len() {
                break;
            }
            idx[d] = 0;
        }
    }
}

/// Integrate `f` over the product domain described by `spec`.
///
/// The error estimate is the difference between the rule with the requested
/// node counts and the rule with half as many nodes per axis. While it exceeds
/// the tolerance, node counts are doubled up to `max_doublings` times; if that
/// is not enough the last value is returned with `converged = false`.
pub fn integrate<F>(f: F, spec: &QuadratureSpec) -> Result<Integral>
where
    F: Fn(&[f64]) -> Complex64,
{
    spec.validate()?;
    let halve = |axes: &[Axis]| -> Vec<Axis> {
        axes.iter()
            .map(|a| a.with_nodes(a.nodes().div_ceil(2).max(2)))
            .collect()
    };
    let mut axes = spec.axes.clone();
    let mut coarse = integrate_fixed(&f, &halve(&axes))?;
    let mut fine = integrate_fixed(&f, &axes)?;
    let mut doublings = 0;
    loop {
        let est = (fine - coarse).norm();
        if est <= spec.tolerance {
            return Ok(Integral {
                value: fine,
                error_estimate: est,
                converged: true,
            });
        }
        if doublings == spec.max_doublings {
            return Ok(Integral {
                value: fine,
                error_estimate: est,
                converged: false,
            });
        }
        axes = axes.iter().map(|a| a.with_nodes(2 * a.nodes())).collect();
        coarse = fine;
        fine = integrate_fixed(&f, &axes)?;
        doublings += 1;
    }
}

/// Moments `∫ ζ^a e^{-ζ² + iνζ} dζ` for `a = 0..=max_power`.
///
/// Uses the recurrence `I_{a+1} = (iν I_a + a I_{a-1}) / 2` from integrating
/// by parts; exact up to rounding.
pub fn gaussian_fourier_moments(nu: f64, max_power: usize, out: &mut Vec<Complex64>) {
    out.clear();
    let i0 = Complex64::new(std::f64::consts::PI.sqrt() * (-0.25 * nu * nu).exp(), 0.0);
    out.push(i0);
    if max_power == 0 {
        return;
    }
    let inu = Complex64::new(0.0, nu);
    out.push(inu * i0 * 0.5);
    for a in 1..max_power {
        let next = (inu * out[a] + out[a - 1] * a as f64) * 0.5;
        out.push(next);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn legendre_integrates_polynomials() {
        let (x, w) = legendre_on(0.0, 2.0, 6);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(11)).sum();
        assert!((s - 2f64.powi(12) / 12.0).abs() < 1e-10);
    }

    #[test]
    fn weights_sum_to_length() {
        for n in [2, 3, 17, 64, 200] {
            let gl = gauss_legendre(n);
            let s: f64 = gl.1.iter().sum();
            assert!((s - 2.0).abs() < 1e-13, "n = {n}");
        }
    }

    #[test]
    fn fourier_moments_match_quadrature() {
        let nu = 1.7;
        let mut m = Vec::new();
        gaussian_fourier_moments(nu, 6, &mut m);
        for (a, &ma) in m.iter().enumerate() {
            let spec = QuadratureSpec::new(
                vec![Axis::FullLine {
                    radius: 9.0,
                    nodes: 201,
                }],
                1e-12,
            );
            let q = integrate(
                |z| Complex64::new(0.0, nu * z[0]).exp() * z[0].powi(a as i32) * (-z[0] * z[0]).exp(),
                &spec,
            )
            .unwrap();
            assert!((q.value - ma).norm() < 1e-12, "a = {a}");
        }
    }

    #[test]
    fn rejects_bad_axes() {
        let spec = QuadratureSpec::new(vec![Axis::FullLine { radius: 1.0, nodes: 1 }], 1e-8);
        assert!(integrate(|_| Complex64::new(1.0, 0.0), &spec).is_err());
        let spec = QuadratureSpec::new(vec![Axis::HalfLine { radius: 0.0, nodes: 8 }], 1e-8);
        assert!(integrate(|_| Complex64::new(1.0, 0.0), &spec).is_err());
    }

    #[test]
    fn non_finite_reports_location() {
        let spec = QuadratureSpec::new(
            vec![Axis::Legendre {
                lower: -1.0,
                upper: 1.0,
                nodes: 3,
            }],
            1e-8,
        );
        let err = integrate(|x| Complex64::new(1.0 / x[0], 0.0), &spec).unwrap_err();
        match err {
            Error::NonFinite { location } => assert_eq!(location, vec![0.0]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_convergence_is_flagged() {
        let spec = QuadratureSpec {
            axes: vec![Axis::Periodic {
                start: 0.0,
                period: 2.0 * PI,
                nodes: 4,
            }],
            tolerance: 1e-14,
            max_doublings: 1,
        };
        let r = integrate(|x| Complex64::new((x[0] * 40.0).cos().powi(2), 0.0) * x[0], &spec).unwrap();
        assert!(!r.converged);
        assert!(r.value.re.is_finite());
    }
}
