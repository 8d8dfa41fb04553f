//! Stationary phase for `I(μ) = ∫∫∫ e^{iΦ(x,ξ,g)/μ} a(x,ξ,g) dx dξ dg` with the
//! phase `Φ(x, ξ, g) = (κ(gx) - κ(x))·ξ`: critical set, transversal Hessians,
//! the leading coefficient, direct and Gaussian-reduced quadrature of I(μ),
//! and power-law fits of the expansion.

use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{
    act_coords_jet, orbit_info, periodic_representative, ChartKind, ModelGeometry, Scenario,
    SPHERE_CHART_RADIUS,
};
use crate::numerics::fit::{fit_leading_order, FitResult};
use crate::numerics::jet::RealJet;
use crate::numerics::quadrature::{gauss_legendre, Axis};

/// A point `(x, ξ, g)` of chart × fibre × group.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoint {
    pub chart: usize,
    pub x: Vec<f64>,
    pub xi: Vec<f64>,
    pub angles: Vec<f64>,
}

impl PhasePoint {
    /// Concatenated ambient coordinates `(x, ξ, θ)`.
    pub fn ambient(&self) -> Vec<f64> {
        let mut v = self.x.clone();
        v.extend_from_slice(&self.xi);
        v.extend_from_slice(&self.angles);
        v
    }

    pub fn from_ambient(scenario: Scenario, chart: usize, v: &[f64]) -> Self {
        let n = scenario.dim();
        Self {
            chart,
            x: v[..n].to_vec(),
            xi: v[n..2 * n].to_vec(),
            angles: v[2 * n..].to_vec(),
        }
    }
}

/// Coordinate difference `κ(gx) - κ(x)` as jets in the ambient variables,
/// reduced to `(-π, π]` on the periodic charts.
fn displacement_jet(scenario: Scenario, chart: usize, vars: &[RealJet]) -> Result<Vec<RealJet>> {
    let n = scenario.dim();
    let geo = ModelGeometry::new(scenario);
    let kind = geo.chart(chart)?.kind;
    let x = &vars[..n];
    let angles = &vars[2 * n..];
    let image = act_coords_jet(scenario, angles, x);
    Ok(image
        .iter()
        .zip(x)
        .map(|(gx, x)| {
            let d = gx - x;
            if kind == ChartKind::Periodic {
                let v = d.value();
                d.add_scalar(periodic_representative(v) - v)
            } else {
                d
            }
        })
        .collect())
}

/// The phase Φ as a jet of the given order in the ambient variables.
pub fn phase_jet(scenario: Scenario, point: &PhasePoint, order: usize) -> Result<RealJet> {
    let vars = RealJet::variables(&point.ambient(), order);
    let n = scenario.dim();
    let disp = displacement_jet(scenario, point.chart, &vars)?;
    let mut phi = &disp[0] * &vars[n];
    for i in 1..n {
        phi = &phi + &(&disp[i] * &vars[n + i]);
    }
    Ok(phi)
}

/// Φ and its gradient over `(x, ξ, θ)`.
pub fn phase_eval_grad(scenario: Scenario, point: &PhasePoint) -> Result<(f64, Vec<f64>)> {
    let j = phase_jet(scenario, point, 1)?;
    Ok((j.value(), j.gradient()))
}

/// A parametrization of an open piece of `Reg C`.
#[derive(Debug, Clone, PartialEq)]
pub struct CriticalChart {
    pub scenario: Scenario,
    pub chart: usize,
    pub dim: usize,
    /// Parameter rectangle; non-compact directions are truncated.
    pub bounds: Vec<(f64, f64)>,
    pub periodic: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalSet {
    pub charts: Vec<CriticalChart>,
    /// Description of `C \ Reg C`.
    pub singular_stratum: String,
}

/// Closed-form parametrizations of `Reg C`.
///
/// Free actions: `C = {(x, 0, e)}`. Sphere: in each stereographic chart,
/// `(r, ϑ, τ) ↦ (r(cos ϑ, sin ϑ), τ(cos ϑ, sin ϑ), e)`, the radial covectors
/// over non-polar points at the identity.
pub fn critical_chart(scenario: Scenario) -> CriticalSet {
    let two_pi = 2.0 * PI;
    match scenario {
        Scenario::Circle | Scenario::Torus2 => CriticalSet {
            charts: vec![CriticalChart {
                scenario,
                chart: 0,
                dim: scenario.dim(),
                bounds: vec![(0.0, two_pi); scenario.dim()],
                periodic: vec![true; scenario.dim()],
            }],
            singular_stratum: "empty (free action)".into(),
        },
        Scenario::Sphere2 => CriticalSet {
            charts: (0..2)
                .map(|chart| CriticalChart {
                    scenario,
                    chart,
                    dim: 3,
                    bounds: vec![
                        (0.0, SPHERE_CHART_RADIUS),
                        (0.0, two_pi),
                        (-f64::INFINITY, f64::INFINITY),
                    ],
                    periodic: vec![false, true, false],
                })
                .collect(),
            singular_stratum: "{(pole, ξ, e)} ∪ {(pole, 0, g)} at both poles".into(),
        },
    }
}

impl CriticalChart {
    /// Ambient coordinates as jets in the parameters.
    pub fn map_jet(&self, params: &[f64], order: usize) -> Vec<RealJet> {
        let p = RealJet::variables(params, order);
        let zero = || RealJet::constant(self.dim, order, 0.0);
        match self.scenario {
            Scenario::Circle | Scenario::Torus2 => {
                let n = self.scenario.dim();
                let mut v = p.clone();
                v.extend((0..n + self.scenario.group_dim()).map(|_| zero()));
                v
            }
            Scenario::Sphere2 => {
                let (c, s) = (p[1].cos(), p[1].sin());
                vec![
                    &p[0] * &c,
                    &p[0] * &s,
                    &p[2] * &c,
                    &p[2] * &s,
                    zero(),
                ]
            }
        }
    }

    pub fn point(&self, params: &[f64]) -> PhasePoint {
        let v: Vec<f64> = self.map_jet(params, 0).iter().map(RealJet::value).collect();
        PhasePoint::from_ambient(self.scenario, self.chart, &v)
    }

    /// Tangent vectors as columns.
    pub fn tangent(&self, params: &[f64]) -> DMatrix<f64> {
        let m = self.map_jet(params, 1);
        DMatrix::from_fn(m.len(), self.dim, |i, j| m[i].gradient()[j])
    }

    /// Induced volume density `√det(TᵀT)`.
    pub fn density(&self, params: &[f64]) -> f64 {
        let t = self.tangent(params);
        (t.transpose() * &t).determinant().max(0.0).sqrt()
    }

    /// Orthonormal basis of the normal space, by Gram–Schmidt against the
    /// tangent space starting from the standard basis.
    pub fn normal_frame(&self, params: &[f64]) -> DMatrix<f64> {
        let t = self.tangent(params);
        let n = t.nrows();
        let mut basis: Vec<DVector<f64>> = Vec::new();
        let push = |v: DVector<f64>, basis: &mut Vec<DVector<f64>>| -> bool {
            let mut w = v.clone();
            for b in basis.iter() {
                w -= b * b.dot(&w);
            }
            for b in basis.iter() {
                w -= b * b.dot(&w);
            }
            if w.norm() > 1e-6 * v.norm().max(1.0) {
                basis.push(w.normalize());
                true
            } else {
                false
            }
        };
        for j in 0..t.ncols() {
            push(t.column(j).into_owned(), &mut basis);
        }
        let tangent_rank = basis.len();
        for i in 0..n {
            let mut e = DVector::zeros(n);
            e[i] = 1.0;
            push(e, &mut basis);
            if basis.len() == n {
                break;
            }
        }
        let normals = &basis[tangent_rank..];
        DMatrix::from_fn(n, normals.len(), |i, j| normals[j][i])
    }

    /// Chart distance to the singular stratum (the poles).
    pub fn distance_to_singular(&self, params: &[f64]) -> f64 {
        match self.scenario {
            Scenario::Sphere2 => params[0].abs(),
            _ => f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HessianReport {
    pub point: PhasePoint,
    /// Hessian of Φ restricted to the normal space, in the normal frame.
    pub matrix: DMatrix<f64>,
    pub abs_det: f64,
    /// Number of positive minus number of negative eigenvalues.
    pub signature: i32,
}

/// Hessian of Φ on the normal bundle of `Reg C` at `params`.
pub fn transversal_hessian(
    chart: &CriticalChart,
    params: &[f64],
    margin: f64,
) -> Result<HessianReport> {
    let frame = chart.normal_frame(params);
    transversal_hessian_in_frame(chart, params, margin, &frame)
}

/// As [`transversal_hessian`] with a caller-supplied orthonormal normal frame.
pub fn transversal_hessian_in_frame(
    chart: &CriticalChart,
    params: &[f64],
    margin: f64,
    frame: &DMatrix<f64>,
) -> Result<HessianReport> {
    let distance = chart.distance_to_singular(params);
    if distance <= margin {
        return Err(Error::TooCloseToSingular { distance, margin });
    }
    let point = chart.point(params);
    let jet = phase_jet(chart.scenario, &point, 2)?;
    let h = DMatrix::from_vec(
        frame.nrows(),
        frame.nrows(),
        jet.hessian().into_iter().flatten().collect(),
    );
    let matrix = frame.transpose() * h * frame;
    let eig = matrix.clone().symmetric_eigen();
    let scale = eig.eigenvalues.amax().max(1e-300);
    let signature = eig
        .eigenvalues
        .iter()
        .map(|&e| {
            if e > 1e-12 * scale {
                1
            } else if e < -1e-12 * scale {
                -1
            } else {
                0
            }
        })
        .sum();
    Ok(HessianReport {
        point,
        abs_det: matrix.determinant().abs(),
        matrix,
        signature,
    })
}

/// Amplitude of the form `b(x, g) · exp(-ξᵀQ(x, g)ξ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianFactor {
    pub prefactor: Complex64,
    pub form: DMatrix<f64>,
}

type FullFn = dyn Fn(&PhasePoint) -> Complex64 + Send + Sync;
type GaussFn = dyn Fn(usize, &[f64], &[f64]) -> GaussianFactor + Send + Sync;

/// Amplitude `a(x, ξ, g)` of an oscillatory integral.
#[derive(Clone)]
pub struct Amplitude {
    pub scenario: Scenario,
    pub name: String,
    full: Arc<FullFn>,
    gaussian: Option<Arc<GaussFn>>,
}

impl std::fmt::Debug for Amplitude {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Amplitude")
            .field("scenario", &self.scenario)
            .field("name", &self.name)
            .field("gaussian", &self.gaussian.is_some())
            .finish()
    }
}

impl Amplitude {
    pub fn general<F>(scenario: Scenario, name: &str, f: F) -> Self
    where
        F: Fn(&PhasePoint) -> Complex64 + Send + Sync + 'static,
    {
        Self {
            scenario,
            name: name.into(),
            full: Arc::new(f),
            gaussian: None,
        }
    }

    /// `a = b(x, g) exp(-ξᵀQξ)` given `(chart, x, angles) ↦ (b, Q)`.
    pub fn gaussian<F>(scenario: Scenario, name: &str, f: F) -> Self
    where
        F: Fn(usize, &[f64], &[f64]) -> GaussianFactor + Send + Sync + 'static,
    {
        let f = Arc::new(f);
        let g = f.clone();
        // the factor only depends on (x, g); remember the last one so that a
        // sweep over ξ evaluates it once
        type Key = (usize, Vec<f64>, Vec<f64>);
        let last: Mutex<Option<(Key, GaussianFactor)>> = Mutex::new(None);
        Self {
            scenario,
            name: name.into(),
            full: Arc::new(move |p: &PhasePoint| {
                let GaussianFactor { prefactor, form } = {
                    let mut guard = last.lock().unwrap_or_else(|e| e.into_inner());
                    match guard.as_ref() {
                        Some((k, v)) if k.0 == p.chart && k.1 == p.x && k.2 == p.angles => v.clone(),
                        _ => {
                            let v = g(p.chart, &p.x, &p.angles);
                            *guard = Some(((p.chart, p.x.clone(), p.angles.clone()), v.clone()));
                            v
                        }
                    }
                };
                if prefactor == Complex64::new(0.0, 0.0) {
                    return prefactor;
                }
                let q: f64 = (0..p.xi.len())
                    .flat_map(|i| (0..p.xi.len()).map(move |k| (i, k)))
                    .map(|(i, k)| p.xi[i] * form[(i, k)] * p.xi[k])
                    .sum();
                prefactor * (-q).exp()
            }),
            gaussian: Some(f),
        }
    }

    pub fn zero(scenario: Scenario) -> Self {
        Self::general(scenario, "zero", |_| Complex64::new(0.0, 0.0))
    }

    pub fn eval(&self, p: &PhasePoint) -> Complex64 {
        (self.full)(p)
    }

    pub fn gaussian_factor(&self, chart: usize, x: &[f64], angles: &[f64]) -> Option<GaussianFactor> {
        self.gaussian.as_ref().map(|g| g(chart, x, angles))
    }

    pub fn is_gaussian(&self) -> bool {
        self.gaussian.is_some()
    }
}

/// `e^{-ξ²} cos²(φ/2) (1 + 0.3 sin θ)` on the circle; equal to 1 at `ξ = 0`,
/// `φ = 0`, θ = 0 and averaging to 1 over C.
pub fn circle_test_amplitude() -> Amplitude {
    Amplitude::gaussian(Scenario::Circle, "circle-gaussian", |_, x, a| GaussianFactor {
        prefactor: Complex64::new((0.5 * a[0]).cos().powi(2) * (1.0 + 0.3 * x[0].sin()), 0.0),
        form: DMatrix::identity(1, 1),
    })
}

/// `e^{-|ξ|²} cos²(φ₁/2) cos²(φ₂/2)` on the torus.
pub fn torus_test_amplitude() -> Amplitude {
    Amplitude::gaussian(Scenario::Torus2, "torus-gaussian", |_, _, a| GaussianFactor {
        prefactor: Complex64::new(
            (0.5 * a[0]).cos().powi(2) * (0.5 * a[1]).cos().powi(2),
            0.0,
        ),
        form: DMatrix::identity(2, 2),
    })
}

/// Level-0 heat amplitude of the functions on the sphere with trivial
/// character: `f̄_γ(x) f_γ(gx) e^{-p₂(gx, ξ)}` in chart γ.
pub fn sphere_heat_amplitude() -> Amplitude {
    let geo = ModelGeometry::new(Scenario::Sphere2);
    Amplitude::gaussian(Scenario::Sphere2, "sphere-heat-level0", move |chart, x, a| {
        let c = &geo.charts[chart];
        let (s, co) = a[0].sin_cos();
        let gx = [co * x[0] - s * x[1], s * x[0] + co * x[1]];
        let pre = c.cutoff(x) * c.partition(&gx);
        let r2 = gx[0] * gx[0] + gx[1] * gx[1];
        let ginv = 0.25 * (1.0 + r2).powi(2);
        GaussianFactor {
            prefactor: Complex64::new(pre, 0.0),
            form: DMatrix::identity(2, 2) * ginv,
        }
    })
}

/// Leading coefficient with its collar history.
#[derive(Debug, Clone, PartialEq)]
pub struct LeadingCoefficient {
    pub value: Complex64,
    pub error_estimate: f64,
    /// `(ε, value with the collar r < ε removed)`; empty without singular
    /// stratum.
    pub collar_values: Vec<(f64, Complex64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeadingOptions {
    /// Nodes per axis on compact critical charts.
    pub flat_nodes: usize,
    /// Gauss–Legendre nodes per radial panel.
    pub radial_nodes: usize,
    pub angular_nodes: usize,
    /// Truncation radius and node count of the fibre parameter τ.
    pub fibre_radius: f64,
    pub fibre_nodes: usize,
    /// First collar width, halved `collar_levels - 1` times.
    pub collar_start: f64,
    pub collar_levels: usize,
}

impl Default for LeadingOptions {
    fn default() -> Self {
        Self {
            flat_nodes: 16,
            radial_nodes: 24,
            angular_nodes: 4,
            fibre_radius: 12.0,
            fibre_nodes: 385,
            collar_start: 0.1,
            collar_levels: 5,
        }
    }
}

/// `L₀ = Σ ∫_{Reg C} a / |det Φ''|_N|^{1/2} d(Reg C)`.
///
/// Near the singular stratum the integral is improper: a collar of width ε
/// around it is removed for a halving sequence of ε and the results are
/// extrapolated to ε = 0. The parameters `(r, ϑ, τ)` and `(-r, ϑ + π, -τ)`
/// name the same point, so the radial weight is even and the excised part
/// expands in odd powers of ε.
pub fn leading_coefficient(amplitude: &Amplitude, opts: &LeadingOptions) -> Result<LeadingCoefficient> {
    let scenario = amplitude.scenario;
    let set = critical_chart(scenario);
    let weight = |chart: &CriticalChart, params: &[f64]| -> Result<Complex64> {
        let a = amplitude.eval(&chart.point(params));
        if a == Complex64::new(0.0, 0.0) {
            return Ok(a);
        }
        let h = transversal_hessian(chart, params, 0.0)?;
        Ok(a * chart.density(params) / h.abs_det.sqrt())
    };
    if scenario.is_flat() {
        let mut total = Complex64::new(0.0, 0.0);
        for chart in &set.charts {
            let axis = Axis::Periodic {
                start: 0.0,
                period: 2.0 * PI,
                nodes: opts.flat_nodes,
            };
            let (nodes, w) = axis.rule();
            let dim = chart.dim;
            let count = nodes.len().pow(dim as u32);
            for flat in 0..count {
                let mut rem = flat;
                let mut params = vec![0.0; dim];
                let mut wt = 1.0;
                for p in params.iter_mut().rev() {
                    *p = nodes[rem % nodes.len()];
                    wt *= w[rem % nodes.len()];
                    rem /= nodes.len();
                }
                total += weight(chart, &params)? * wt;
            }
        }
        return Ok(LeadingCoefficient {
            value: total,
            error_estimate: 0.0,
            collar_values: Vec::new(),
        });
    }
    // sphere: (r, ϑ, τ) with panels in r broken where the partition and
    // cutoff switch
    if opts.collar_levels < 2 {
        return Err(Error::TooFewSamples {
            required: 2,
            got: opts.collar_levels,
        });
    }
    let eps: Vec<f64> = (0..opts.collar_levels)
        .map(|i| opts.collar_start / 2f64.powi(i as i32))
        .collect();
    let b1 = 1.0 / 3f64.sqrt();
    if opts.collar_start >= b1 {
        return Err(Error::InvalidInput(format!(
            "collar width {} must stay below {b1}",
            opts.collar_start
        )));
    }
    let fixed = [b1, 1.0, 3f64.sqrt(), 7f64.sqrt(), SPHERE_CHART_RADIUS];
    let (th_nodes, th_w) = Axis::Periodic {
        start: 0.0,
        period: 2.0 * PI,
        nodes: opts.angular_nodes,
    }
    .rule();
    let (tau_nodes, tau_w) = Axis::FullLine {
        radius: opts.fibre_radius,
        nodes: opts.fibre_nodes,
    }
    .rule();
    let panel = |a: f64, b: f64| -> Result<Complex64> {
        let gl = gauss_legendre(opts.radial_nodes);
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        let mut s = Complex64::new(0.0, 0.0);
        for chart in &set.charts {
            for (z, wz) in gl.0.iter().zip(&gl.1) {
                let r = mid + half * z;
                for (th, wth) in th_nodes.iter().zip(&th_w) {
                    for (tau, wtau) in tau_nodes.iter().zip(&tau_w) {
                        s += weight(chart, &[r, *th, *tau])? * (half * wz * wth * wtau);
                    }
                }
            }
        }
        Ok(s)
    };
    let mut outer = Complex64::new(0.0, 0.0);
    for w in fixed.windows(2) {
        outer += panel(w[0], w[1])?;
    }
    let mut collar_values = Vec::new();
    for &e in &eps {
        collar_values.push((e, outer + panel(e, b1)?));
    }
    let l: Vec<Complex64> = collar_values.iter().map(|v| v.1).collect();
    let steps: Vec<f64> = l.windows(2).map(|w| (w[1] - w[0]).norm()).collect();
    let scale = l.last().map_or(1.0, |v| v.norm()).max(1e-300);
    if steps
        .windows(2)
        .any(|w| w[1] > 0.75 * w[0] && w[1] > 1e-13 * scale)
    {
        return Err(Error::CollarDivergence {
            values: l.iter().map(|v| v.re).collect(),
        });
    }
    // Neville table eliminating ε, ε³, ε⁵, ...
    let mut table = l.clone();
    let mut previous = table[table.len() - 1];
    for m in 0..table.len() - 1 {
        let f = 2f64.powi(2 * m as i32 + 1);
        previous = table[table.len() - 1];
        table = table
            .windows(2)
            .map(|w| (w[1] * f - w[0]) / (f - 1.0))
            .collect();
    }
    let value = table[0];
    Ok(LeadingCoefficient {
        value,
        error_estimate: (value - previous).norm(),
        collar_values,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OscillatoryMethod {
    /// Tensor-product quadrature over all of `(x, ξ, g)`.
    Direct,
    /// Exact Gaussian Fourier transform in ξ, quadrature over `(x, g)`.
    Reduced,
    /// Reduced when the amplitude is Gaussian in ξ, otherwise direct.
    Auto,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OscillatoryOptions {
    /// Periodic nodes per axis of x on the flat scenarios.
    pub flat_x_nodes: usize,
    /// Gauss–Legendre nodes per radial panel on the sphere charts.
    pub radial_nodes: usize,
    pub angular_nodes: usize,
    /// Gauss–Legendre nodes per group panel.
    pub group_nodes: usize,
    /// ξ truncation radius for amplitudes without a Gaussian factor.
    pub xi_radius: f64,
}

impl Default for OscillatoryOptions {
    fn default() -> Self {
        Self {
            flat_x_nodes: 8,
            radial_nodes: 24,
            angular_nodes: 8,
            group_nodes: 16,
            xi_radius: 8.0,
        }
    }
}

impl OscillatoryOptions {
    /// Smaller rule used for the five-dimensional direct quadrature.
    pub fn lean() -> Self {
        Self {
            flat_x_nodes: 4,
            radial_nodes: 8,
            angular_nodes: 4,
            group_nodes: 10,
            xi_radius: 8.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillatoryValue {
    pub value: Complex64,
    pub error_estimate: f64,
    pub method: OscillatoryMethod,
}

/// Gauss–Legendre rule on `(-π, π]` with panels that shrink geometrically
/// towards the identity, down to width about `μ/4`.
pub fn graded_group_rule(mu: f64, per_panel: usize) -> Vec<(f64, f64)> {
    let levels = ((4.0 * PI / mu).log2().ceil() as i32).max(1);
    let mut breaks = vec![0.0];
    for m in (0..=levels).rev() {
        breaks.push(PI / 2f64.powi(m));
    }
    let gl = gauss_legendre(per_panel);
    let mut out = Vec::new();
    for sign in [-1.0, 1.0] {
        for w in breaks.windows(2) {
            let (mid, half) = (0.5 * (w[0] + w[1]), 0.5 * (w[1] - w[0]));
            for (z, wz) in gl.0.iter().zip(&gl.1) {
                out.push((sign * (mid + half * z), half * wz));
            }
        }
    }
    out
}

/// `(chart, x, weight)` nodes of the base manifold.
fn base_nodes(scenario: Scenario, mu: f64, opts: &OscillatoryOptions) -> Vec<(usize, Vec<f64>, f64)> {
    let geo = ModelGeometry::new(scenario);
    if scenario.is_flat() {
        let n = scenario.dim();
        let k = opts.flat_x_nodes;
        let h = 2.0 * PI / k as f64;
        (0..k.pow(n as u32))
            .map(|flat| {
                let mut rem = flat;
                let mut x = vec![0.0; n];
                for c in x.iter_mut().rev() {
                    *c = h * (rem % k) as f64;
                    rem /= k;
                }
                (0, x, h.powi(n as i32))
            })
            .collect()
    } else {
        let outer = geo.charts[0].cutoff_support_radius().expect("sphere chart");
        // near the poles the x-integrand varies on the scale μ
        let first = 1.0 / 3f64.sqrt();
        let mut breaks = vec![0.0];
        let mut b = 0.25 * mu;
        while b < 0.5 * first {
            breaks.push(b);
            b *= 2.0;
        }
        breaks.extend([first, 1.0, 3f64.sqrt(), outer]);
        let gl = gauss_legendre(opts.radial_nodes);
        let dth = 2.0 * PI / opts.angular_nodes as f64;
        let mut out = Vec::new();
        for chart in 0..2 {
            for w in breaks.windows(2) {
                let (mid, half) = (0.5 * (w[0] + w[1]), 0.5 * (w[1] - w[0]));
                for (z, wz) in gl.0.iter().zip(&gl.1) {
                    let r = mid + half * z;
                    for i in 0..opts.angular_nodes {
                        let th = dth * i as f64;
                        out.push((chart, vec![r * th.cos(), r * th.sin()], half * wz * r * dth));
                    }
                }
            }
        }
        out
    }
}

fn group_nodes(scenario: Scenario, mu: f64, per_panel: usize) -> Vec<(Vec<f64>, f64)> {
    let rule = graded_group_rule(mu, per_panel);
    match scenario.group_dim() {
        1 => rule.into_iter().map(|(a, w)| (vec![a], w)).collect(),
        _ => {
            let mut out = Vec::with_capacity(rule.len() * rule.len());
            for &(a, wa) in &rule {
                for &(b, wb) in &rule {
                    out.push((vec![a, b], wa * wb));
                }
            }
            out
        }
    }
}

fn displacement(scenario: Scenario, chart: usize, x: &[f64], angles: &[f64]) -> Result<Vec<f64>> {
    let p = PhasePoint {
        chart,
        x: x.to_vec(),
        xi: vec![0.0; scenario.dim()],
        angles: angles.to_vec(),
    };
    let vars = RealJet::variables(&p.ambient(), 0);
    Ok(displacement_jet(scenario, chart, &vars)?
        .iter()
        .map(RealJet::value)
        .collect())
}

/// `I(μ) = ∫_G ∫_M ∫ e^{iΦ/μ} a dξ dx̃ dg` (chart Lebesgue measure in x,
/// Lebesgue in ξ, Haar `dθ` on G).
pub fn oscillatory_integral(
    amplitude: &Amplitude,
    mu: f64,
    method: OscillatoryMethod,
    opts: &OscillatoryOptions,
) -> Result<OscillatoryValue> {
    if !(mu > 0.0) {
        return Err(Error::InvalidInput(format!("μ must be positive, got {mu}")));
    }
    let method = match method {
        OscillatoryMethod::Auto if amplitude.is_gaussian() => OscillatoryMethod::Reduced,
        OscillatoryMethod::Auto => OscillatoryMethod::Direct,
        m => m,
    };
    if method == OscillatoryMethod::Reduced && !amplitude.is_gaussian() {
        return Err(Error::InvalidInput(
            "reduced quadrature needs an amplitude with a Gaussian ξ factor".into(),
        ));
    }
    let run = |per_panel: usize, x_opts: &OscillatoryOptions| -> Result<Complex64> {
        match method {
            OscillatoryMethod::Reduced => reduced(amplitude, mu, per_panel, x_opts),
            _ => direct(amplitude, mu, per_panel, x_opts),
        }
    };
    let fine = run(opts.group_nodes, opts)?;
    let mut coarse_opts = opts.clone();
    coarse_opts.radial_nodes = (opts.radial_nodes * 2).div_ceil(3).max(2);
    let coarse = run((opts.group_nodes * 2).div_ceil(3).max(2), &coarse_opts)?;
    Ok(OscillatoryValue {
        value: fine,
        error_estimate: (fine - coarse).norm(),
        method,
    })
}

fn reduced(amplitude: &Amplitude, mu: f64, per_panel: usize, opts: &OscillatoryOptions) -> Result<Complex64> {
    let scenario = amplitude.scenario;
    let n = scenario.dim();
    let xs = base_nodes(scenario, mu, opts);
    let gs = group_nodes(scenario, mu, per_panel);
    let mut total = Complex64::new(0.0, 0.0);
    for (chart, x, wx) in &xs {
        for (angles, wg) in &gs {
            let f = amplitude
                .gaussian_factor(*chart, x, angles)
                .expect("checked Gaussian amplitude");
            if f.prefactor == Complex64::new(0.0, 0.0) {
                continue;
            }
            let d = displacement(scenario, *chart, x, angles)?;
            let (quad, det) = inverse_form(&f.form, &d)?;
            // ∫ e^{iΔ·ξ/μ} e^{-ξᵀQξ} dξ = π^{n/2} det(Q)^{-1/2} e^{-ΔᵀQ⁻¹Δ/(4μ²)}
            let ft = PI.powf(n as f64 / 2.0) / det.sqrt() * (-quad / (4.0 * mu * mu)).exp();
            total += f.prefactor * ft * (wx * wg);
        }
    }
    Ok(total)
}

/// `(ΔᵀQ⁻¹Δ, det Q)` for a positive definite form.
fn inverse_form(q: &DMatrix<f64>, d: &[f64]) -> Result<(f64, f64)> {
    let bad = || Error::InvalidInput("Gaussian form must be positive definite".into());
    match d.len() {
        1 => {
            let a = q[(0, 0)];
            if !(a > 0.0) {
                return Err(bad());
            }
            Ok((d[0] * d[0] / a, a))
        }
        2 => {
            let (a, b, c) = (q[(0, 0)], 0.5 * (q[(0, 1)] + q[(1, 0)]), q[(1, 1)]);
            let det = a * c - b * b;
            if !(det > 0.0 && a > 0.0) {
                return Err(bad());
            }
            Ok(((c * d[0] * d[0] - 2.0 * b * d[0] * d[1] + a * d[1] * d[1]) / det, det))
        }
        _ => {
            let chol = q.clone().cholesky().ok_or_else(bad)?;
            let v = DVector::from_column_slice(d);
            let det = chol.determinant();
            Ok((v.dot(&chol.solve(&v)), det))
        }
    }
}

fn direct(amplitude: &Amplitude, mu: f64, per_panel: usize, opts: &OscillatoryOptions) -> Result<Complex64> {
    let scenario = amplitude.scenario;
    let n = scenario.dim();
    let xs = base_nodes(scenario, mu, opts);
    let gs = group_nodes(scenario, mu, per_panel);
    let mut total = Complex64::new(0.0, 0.0);
    let mut xi = vec![0.0; n];
    for (chart, x, wx) in &xs {
        for (angles, wg) in &gs {
            // box and step from the Gaussian factor when known
            let (radius, bandwidth) = match amplitude.gaussian_factor(*chart, x, angles) {
                Some(f) if f.prefactor == Complex64::new(0.0, 0.0) => continue,
                Some(f) => {
                    let eig = f.form.clone().symmetric_eigen().eigenvalues;
                    let (lo, hi) = (eig.min(), eig.max());
                    ((37.0 / lo).sqrt(), 12.2 * hi.sqrt() + 1.0)
                }
                None => (opts.xi_radius, 13.0),
            };
            let d = displacement(scenario, *chart, x, angles)?;
            let axes: Vec<(Vec<f64>, Vec<f64>)> = d
                .iter()
                .map(|di| {
                    let step = 2.0 * PI / (di.abs() / mu + bandwidth);
                    let nodes = ((2.0 * radius / step).ceil() as usize + 1).max(9);
                    Axis::FullLine { radius, nodes }.rule()
                })
                .collect();
            let count: usize = axes.iter().map(|a| a.0.len()).product();
            let mut sum = Complex64::new(0.0, 0.0);
            for flat in 0..count {
                let mut rem = flat;
                let mut w = 1.0;
                let mut phase = 0.0;
                for (i, ax) in axes.iter().enumerate().rev() {
                    let k = rem % ax.0.len();
                    rem /= ax.0.len();
                    xi[i] = ax.0[k];
                    w *= ax.1[k];
                    phase += d[i] * xi[i];
                }
                let p = PhasePoint {
                    chart: *chart,
                    x: x.clone(),
                    xi: xi.clone(),
                    angles: angles.clone(),
                };
                let a = amplitude.eval(&p);
                if !(a.re.is_finite() && a.im.is_finite()) {
                    return Err(Error::NonFinite {
                        location: p.ambient(),
                    });
                }
                sum += a * Complex64::from_polar(w, phase / mu);
            }
            total += sum * (wx * wg);
        }
    }
    Ok(total)
}

/// Samples of I(μ) against `(2πμ)^κ L₀` with power-law fits.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionReport {
    pub scenario: Scenario,
    pub kappa: usize,
    pub lambda: usize,
    pub leading_coefficient: Complex64,
    /// `(μ, I(μ), (2πμ)^κ L₀, quadrature error estimate)`.
    pub samples: Vec<(f64, Complex64, Complex64, f64)>,
    /// Fit of `|I(μ)| ≈ C μ^p`.
    pub order_fit: FitResult,
    /// Fit of `|I(μ) - (2πμ)^κ L₀| ≈ C μ^p (ln 1/μ)^{Λ-1}`.
    pub remainder_fit: Option<FitResult>,
}

impl ExpansionReport {
    /// `I(μ)/((2πμ)^κ L₀)` at each sample.
    pub fn ratios(&self) -> Vec<f64> {
        self.samples.iter().map(|s| (s.1 / s.2).re).collect()
    }
}

pub fn expansion_fit(
    amplitude: &Amplitude,
    mus: &[f64],
    leading: Option<Complex64>,
    opts: &OscillatoryOptions,
) -> Result<ExpansionReport> {
    if mus.len() < 3 {
        return Err(Error::TooFewSamples {
            required: 3,
            got: mus.len(),
        });
    }
    let scenario = amplitude.scenario;
    let info = orbit_info(scenario);
    let l0 = match leading {
        Some(v) => v,
        None => leading_coefficient(amplitude, &LeadingOptions::default())?.value,
    };
    let mut samples = Vec::with_capacity(mus.len());
    for &mu in mus {
        let v = oscillatory_integral(amplitude, mu, OscillatoryMethod::Auto, opts)?;
        let lead = l0 * (2.0 * PI * mu).powi(info.kappa as i32);
        samples.push((mu, v.value, lead, v.error_estimate));
    }
    let order_fit = fit_leading_order(
        &samples.iter().map(|s| (s.0, s.1.norm())).collect::<Vec<_>>(),
        0.0,
    )?;
    let rem: Vec<(f64, f64)> = samples.iter().map(|s| (s.0, (s.1 - s.2).norm())).collect();
    let remainder_fit = if rem.iter().all(|r| r.1 > 0.0) && mus.iter().all(|&m| m < 1.0) {
        Some(fit_leading_order(&rem, info.lambda as f64 - 1.0)?)
    } else {
        None
    };
    Ok(ExpansionReport {
        scenario,
        kappa: info.kappa,
        lambda: info.lambda,
        leading_coefficient: l0,
        samples,
        order_fit,
        remainder_fit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_phase_is_linear() {
        let p = PhasePoint {
            chart: 0,
            x: vec![0.4],
            xi: vec![2.0],
            angles: vec![0.3],
        };
        let (v, g) = phase_eval_grad(Scenario::Circle, &p).unwrap();
        assert!((v - 0.6).abs() < 1e-15);
        assert!(g[0].abs() < 1e-15);
        assert!((g[1] - 0.3).abs() < 1e-15);
        assert!((g[2] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn circle_hessian() {
        let set = critical_chart(Scenario::Circle);
        let h = transversal_hessian(&set.charts[0], &[1.0], 0.0).unwrap();
        assert!((h.abs_det - 1.0).abs() < 1e-14);
        assert_eq!(h.signature, 0);
        assert!((h.matrix[(0, 1)].abs() - 1.0).abs() < 1e-14);
        assert!(h.matrix[(0, 0)].abs() < 1e-14);
    }

    #[test]
    fn sphere_hessian_determinant() {
        let set = critical_chart(Scenario::Sphere2);
        let (r, tau) = (0.7, -1.3);
        let h = transversal_hessian(&set.charts[0], &[r, 0.4, tau], 0.01).unwrap();
        assert!((h.abs_det - (r * r + tau * tau)).abs() < 1e-12);
        assert_eq!(h.signature, 0);
        assert!(matches!(
            transversal_hessian(&set.charts[1], &[0.001, 0.0, 1.0], 0.01),
            Err(Error::TooCloseToSingular { .. })
        ));
    }

    #[test]
    fn zero_amplitude() {
        let a = Amplitude::zero(Scenario::Circle);
        let v = oscillatory_integral(&a, 0.1, OscillatoryMethod::Direct, &OscillatoryOptions::default()).unwrap();
        assert_eq!(v.value, Complex64::new(0.0, 0.0));
        let l = leading_coefficient(&a, &LeadingOptions::default()).unwrap();
        assert_eq!(l.value, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn graded_rule_integrates_constants() {
        let s: f64 = graded_group_rule(0.05, 8).iter().map(|p| p.1).sum();
        assert!((s - 2.0 * PI).abs() < 1e-12);
    }
}
