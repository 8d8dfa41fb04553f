//! Heat parametrix: resolvent symbol recursion, heat symbols obtained by
//! contour integration, and the localized equivariant heat trace.
//!
//! The resolvent symbols are kept in the pole basis
//! `r_k = Σ_j A_{k,j}(x, ξ) (p₂ - λ)^{-j}`, where each `A_{k,j}` is a
//! polynomial in ξ whose coefficients are jets in x. Contour integration then
//! reduces to the residue formula
//! `(1/2πi) ∮ e^{-tλ} (p₂ - λ)^{-j} dλ = t^{j-1}/(j-1)! e^{-t p₂}`
//! for a clockwise contour around `p₂`.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;
use std::sync::OnceLock;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::complexes::{laplace_symbol, pullback_matrix, LocalSymbol};
use crate::error::{Error, Result};
use crate::geometry::{act, periodic_representative, ChartPoint, GroupElement, ModelGeometry, Scenario};
use crate::numerics::jet::ComplexJet;
use crate::numerics::quadrature::{gauss_legendre, gaussian_fourier_moments, integrate, Axis, QuadratureSpec};

/// Deepest parametrix level supported.
pub const MAX_LEVEL: usize = 2;

/// Polynomial in ξ with x-jet coefficients.
#[derive(Debug, Clone)]
pub struct SymPoly {
    xi_dim: usize,
    terms: BTreeMap<Vec<u8>, ComplexJet>,
}

fn is_zero_jet(j: &ComplexJet) -> bool {
    j.coefficients().iter().all(|c| c.re == 0.0 && c.im == 0.0)
}

impl SymPoly {
    pub fn zero(xi_dim: usize) -> Self {
        Self {
            xi_dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(xi_dim: usize, c: ComplexJet) -> Self {
        let mut p = Self::zero(xi_dim);
        p.add_term(vec![0; xi_dim], c);
        p
    }

    pub fn xi_dim(&self) -> usize {
        self.xi_dim
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u8>, &ComplexJet)> {
        self.terms.iter()
    }

    /// Add `c ξ^e`; terms whose jets vanish identically are dropped.
    pub fn add_term(&mut self, e: Vec<u8>, c: ComplexJet) {
        let merged = match self.terms.remove(&e) {
            Some(old) => &old + &c,
            None => c,
        };
        if !is_zero_jet(&merged) {
            self.terms.insert(e, merged);
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.xi_dim);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(e, ca * cb);
            }
        }
        out
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut out = Self::zero(self.xi_dim);
        for (e, c) in &self.terms {
            out.add_term(e.clone(), c.scale(s));
        }
        out
    }

    pub fn d_xi(&self, var: usize) -> Self {
        let mut out = Self::zero(self.xi_dim);
        for (e, c) in &self.terms {
            if e[var] == 0 {
                continue;
            }
            let mut d = e.clone();
            d[var] -= 1;
            out.add_term(d, c.scale(Complex64::new(e[var] as f64, 0.0)));
        }
        out
    }

    pub fn d_x(&self, var: usize) -> Result<Self> {
        let mut out = Self::zero(self.xi_dim);
        for (e, c) in &self.terms {
            out.add_term(e.clone(), c.differentiate(var)?);
        }
        Ok(out)
    }

    /// Lowest jet order among the coefficients.
    pub fn order(&self) -> Option<usize> {
        self.terms.values().map(ComplexJet::order).min()
    }

    pub fn degree(&self) -> Option<usize> {
        self.terms
            .keys()
            .map(|e| e.iter().map(|&a| a as usize).sum())
            .max()
    }

    /// Whether every monomial has total degree `deg`.
    pub fn is_homogeneous(&self, deg: usize) -> bool {
        self.terms
            .keys()
            .all(|e| e.iter().map(|&a| a as usize).sum::<usize>() == deg)
    }

    /// Monomials with the base-point values of their coefficients.
    pub fn values(&self) -> Vec<(Vec<u8>, Complex64)> {
        self.terms
            .iter()
            .map(|(e, c)| (e.clone(), c.value()))
            .collect()
    }

    pub fn eval(&self, xi: &[f64]) -> Complex64 {
        self.terms
            .iter()
            .map(|(e, c)| c.value() * monomial(e, xi))
            .sum()
    }
}

fn monomial(e: &[u8], xi: &[f64]) -> f64 {
    e.iter().zip(xi).map(|(&a, &x)| x.powi(a as i32)).product()
}

/// One level `r_k` of the resolvent recursion in the pole basis.
#[derive(Debug, Clone)]
pub struct ResolventSymbol {
    pub level: usize,
    /// `j ↦ A_{k,j}`.
    pub terms: BTreeMap<usize, SymPoly>,
}

impl ResolventSymbol {
    pub fn max_pole_order(&self) -> usize {
        self.terms.keys().copied().max().unwrap_or(0)
    }

    /// `Σ_j A_{k,j}(x, ξ) (p₂ - λ)^{-j}` at the base point.
    pub fn eval(&self, xi: &[f64], p2: f64, lambda: Complex64) -> Complex64 {
        let u = Complex64::new(p2, 0.0) - lambda;
        self.terms
            .iter()
            .map(|(&j, a)| a.eval(xi) / u.powi(j as i32))
            .sum()
    }
}

/// The resolvent levels `r_0..=r_K` at one base point.
#[derive(Debug, Clone)]
pub struct ResolventExpansion {
    pub base: Vec<f64>,
    pub rank: usize,
    pub p2: SymPoly,
    pub levels: Vec<ResolventSymbol>,
}

fn multi_indices(n: usize, deg: usize) -> Vec<Vec<u8>> {
    if n == 1 {
        return vec![vec![deg as u8]];
    }
    let mut out = Vec::new();
    for first in 0..=deg {
        for mut rest in multi_indices(n - 1, deg - first) {
            rest.insert(0, first as u8);
            out.push(rest);
        }
    }
    out
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// `∂_{x_var}` of `Σ_j A_j u^{-j}` with `u = p₂ - λ`:
/// `(∂A_j) u^{-j} - j A_j (∂p₂) u^{-j-1}`.
fn d_x_poles(
    terms: &BTreeMap<usize, SymPoly>,
    var: usize,
    p2: &SymPoly,
) -> Result<BTreeMap<usize, SymPoly>> {
    let dp2 = p2.d_x(var)?;
    let mut out: BTreeMap<usize, SymPoly> = BTreeMap::new();
    for (&j, a) in terms {
        let da = a.d_x(var)?;
        accumulate(&mut out, j, &da);
        let shifted = a.mul(&dp2).scale(Complex64::new(-(j as f64), 0.0));
        accumulate(&mut out, j + 1, &shifted);
    }
    out.retain(|_, p| !p.is_zero());
    Ok(out)
}

fn accumulate(map: &mut BTreeMap<usize, SymPoly>, j: usize, p: &SymPoly) {
    if p.is_zero() {
        return;
    }
    let entry = map.entry(j).or_insert_with(|| SymPoly::zero(p.xi_dim()));
    *entry = entry.add(p);
}

/// Resolvent symbols `r_0, …, r_K` of a Laplace-type symbol at `coords`:
///
/// `r_0 = (p₂ - λ)^{-1}`,
/// `r_k = -r_0 Σ (-i)^{|β|}/β! ∂_ξ^β p_l ∂_x^β r_{l'}`
/// over `|β| + 2 + l' - l = k`, `l' < k`, `|β| ≤ l`.
///
/// Coefficients of `r_k` carry x-jets of order `jet_order - k`, so
/// `jet_order ≥ K` is required.
pub fn resolvent_recursion(
    symbol: &LocalSymbol,
    coords: &[f64],
    k_max: usize,
    jet_order: usize,
) -> Result<ResolventExpansion> {
    if k_max > MAX_LEVEL {
        return Err(Error::InvalidInput(format!(
            "parametrix level {k_max} exceeds the supported maximum {MAX_LEVEL}"
        )));
    }
    if jet_order < k_max {
        return Err(Error::JetOrderExhausted {
            level: k_max,
            required: k_max,
            available: jet_order,
        });
    }
    let parts = symbol.parts(coords, jet_order)?;
    let n = symbol.scenario.dim();
    let p2 = parts[2].clone();
    let one = ComplexJet::constant(n, jet_order, Complex64::new(1.0, 0.0));
    let mut levels = vec![ResolventSymbol {
        level: 0,
        terms: BTreeMap::from([(1, SymPoly::constant(n, one))]),
    }];
    for k in 1..=k_max {
        let mut acc: BTreeMap<usize, SymPoly> = BTreeMap::new();
        for lp in 0..k {
            for (l, pl) in parts.iter().enumerate() {
                let b = k as i64 + l as i64 - 2 - lp as i64;
                if b < 0 || b > l as i64 {
                    continue;
                }
                let b = b as usize;
                let coef = Complex64::new(0.0, -1.0).powi(b as i32);
                for beta in multi_indices(n, b) {
                    let mut dp = pl.clone();
                    let mut dr = levels[lp].terms.clone();
                    let mut beta_fact = 1.0;
                    for (var, &m) in beta.iter().enumerate() {
                        beta_fact *= factorial(m as usize);
                        for _ in 0..m {
                            dp = dp.d_xi(var);
                            dr = d_x_poles(&dr, var, &p2).map_err(|_| Error::JetOrderExhausted {
                                level: k,
                                required: k_max,
                                available: jet_order,
                            })?;
                        }
                    }
                    if dp.is_zero() {
                        continue;
                    }
                    let c = coef / beta_fact;
                    for (&j, a) in &dr {
                        accumulate(&mut acc, j, &dp.mul(a).scale(c));
                    }
                }
            }
        }
        // multiply by -r_0 = -(p₂ - λ)^{-1}
        let terms = acc
            .into_iter()
            .filter(|(_, p)| !p.is_zero())
            .map(|(j, p)| (j + 1, p.scale(Complex64::new(-1.0, 0.0))))
            .collect();
        levels.push(ResolventSymbol { level: k, terms });
    }
    Ok(ResolventExpansion {
        base: coords.to_vec(),
        rank: symbol.rank,
        p2,
        levels,
    })
}

/// Scalar part of the heat symbol `e_k(t, x, ξ)`; the matrix value is this
/// times the identity of size `rank`.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatSymbolValue {
    pub level: usize,
    pub t: f64,
    pub xi: Vec<f64>,
    pub rank: usize,
    pub value: Complex64,
}

/// Closed-form residue evaluation of
/// `e_k(t, x, ξ) = Σ_j A_{k,j}(x, ξ) t^{j-1}/(j-1)! e^{-t p₂(x, ξ)}`.
pub fn heat_symbol(r: &ResolventExpansion, level: usize, t: f64, xi: &[f64]) -> Result<HeatSymbolValue> {
    if !(t > 0.0) {
        return Err(Error::InvalidInput(format!("heat time must be positive, got {t}")));
    }
    let lvl = r.levels.get(level).ok_or_else(|| {
        Error::InvalidInput(format!("level {level} not computed (have {})", r.levels.len()))
    })?;
    orientation_checked();
    let p2 = r.p2.eval(xi).re;
    let decay = (-t * p2).exp();
    let value = lvl
        .terms
        .iter()
        .map(|(&j, a)| a.eval(xi) * t.powi(j as i32 - 1) / factorial(j - 1))
        .sum::<Complex64>()
        * decay;
    Ok(HeatSymbolValue {
        level,
        t,
        xi: xi.to_vec(),
        rank: r.rank,
        value,
    })
}

/// Circle contour for `(1/2πi) ∮ e^{-tλ} r_k dλ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourSpec {
    pub center: Complex64,
    pub radius: f64,
    pub nodes: usize,
    pub clockwise: bool,
}

impl ContourSpec {
    /// Clockwise circle of radius 1 centered at the pole.
    pub fn around(p2: f64) -> Self {
        Self {
            center: Complex64::new(p2, 0.0),
            radius: 1.0,
            nodes: 128,
            clockwise: true,
        }
    }

    pub fn validate(&self, p2: f64) -> Result<()> {
        if self.nodes < 64 || self.nodes % 2 != 0 {
            return Err(Error::InvalidInput(format!(
                "contour needs an even node count ≥ 64, got {}",
                self.nodes
            )));
        }
        if !(self.radius > (self.center - p2).norm()) {
            return Err(Error::InvalidInput(format!(
                "contour of radius {} around {} does not enclose the pole {p2}",
                self.radius, self.center
            )));
        }
        Ok(())
    }
}

/// Trapezoid-rule contour integral of `e^{-tλ} r_k(λ)`.
pub fn contour_heat_symbol(
    r: &ResolventExpansion,
    level: usize,
    t: f64,
    xi: &[f64],
    spec: &ContourSpec,
) -> Result<Complex64> {
    let lvl = r
        .levels
        .get(level)
        .ok_or_else(|| Error::InvalidInput(format!("level {level} not computed")))?;
    let p2 = r.p2.eval(xi).re;
    spec.validate(p2)?;
    Ok(contour_sum(spec, |lambda| {
        (-t * lambda).exp() * lvl.eval(xi, p2, lambda)
    }))
}

fn contour_sum(spec: &ContourSpec, f: impl Fn(Complex64) -> Complex64) -> Complex64 {
    let dir = if spec.clockwise { -1.0 } else { 1.0 };
    let mut sum = Complex64::new(0.0, 0.0);
    for i in 0..spec.nodes {
        let theta = 2.0 * PI * i as f64 / spec.nodes as f64;
        let w = Complex64::from_polar(spec.radius, dir * theta);
        // dλ = i·dir·w dθ
        sum += f(spec.center + w) * Complex64::new(0.0, dir) * w;
    }
    sum * (2.0 * PI / spec.nodes as f64) / Complex64::new(0.0, 2.0 * PI)
}

/// Checks once per process that the clockwise contour reproduces
/// `e_0 = e^{-t p₂}`, which fixes the sign used by [`heat_symbol`].
fn orientation_checked() {
    static CHECK: OnceLock<()> = OnceLock::new();
    CHECK.get_or_init(|| {
        let (p2, t) = (1.3, 0.7);
        let spec = ContourSpec::around(p2);
        let e0 = contour_sum(&spec, |l| (-t * l).exp() / (Complex64::new(p2, 0.0) - l));
        assert!(
            (e0 - (-t * p2).exp()).norm() < 1e-12,
            "contour orientation self-test failed: {e0}"
        );
    });
}

/// Per-node heat symbol data with the principal quadratic form whitened.
///
/// With `p₂(y, η) = ηᵀMη` and `M = LLᵀ`, substituting `η = L^{-T}ζ` turns
/// `e_k(1, y, η)` into a polynomial in ζ times `e^{-|ζ|²}`, so that
/// `∫ e^{iΔ·η/√t} e_k(1, y, η) dη` is a finite sum of one-dimensional
/// Gaussian Fourier moments.
#[derive(Debug, Clone)]
pub struct WhitenedSymbol {
    n: usize,
    l_inv: DMatrix<f64>,
    jacobian: f64,
    levels: Vec<Vec<(Vec<u8>, Complex64)>>,
    max_degree: usize,
}

impl WhitenedSymbol {
    pub fn new(r: &ResolventExpansion) -> Result<Self> {
        let n = r.p2.xi_dim();
        let m = DMatrix::from_fn(n, n, |i, j| {
            let mut e = vec![0u8; n];
            e[i] += 1;
            e[j] += 1;
            let c = r.p2.values().into_iter().find(|(k, _)| *k == e).map_or(0.0, |v| v.1.re);
            if i == j {
                c
            } else {
                0.5 * c
            }
        });
        let chol = m.clone().cholesky().ok_or_else(|| {
            Error::InvalidInput(format!("principal symbol is not positive definite: {m}"))
        })?;
        let l = chol.l();
        let l_inv = l
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::InvalidInput("singular principal symbol".into()))?;
        let b = l_inv.transpose();
        let mut levels = Vec::with_capacity(r.levels.len());
        let mut max_degree = 0;
        for lvl in &r.levels {
            let mut poly: BTreeMap<Vec<u8>, Complex64> = BTreeMap::new();
            for (&j, a) in &lvl.terms {
                let w = 1.0 / factorial(j - 1);
                for (e, c) in a.values() {
                    for (ez, cz) in substitute(&e, &b) {
                        *poly.entry(ez).or_insert(Complex64::new(0.0, 0.0)) += c * cz * w;
                    }
                }
            }
            let terms: Vec<(Vec<u8>, Complex64)> =
                poly.into_iter().filter(|(_, c)| c.norm() > 0.0).collect();
            for (e, _) in &terms {
                max_degree = max_degree.max(e.iter().map(|&a| a as usize).max().unwrap_or(0));
            }
            levels.push(terms);
        }
        Ok(Self {
            n,
            jacobian: 1.0 / l.determinant(),
            l_inv,
            levels,
            max_degree,
        })
    }

    /// `∫ e^{iΔ·η/√t} e_k(1, y, η) dη` for each computed level k.
    pub fn fourier(&self, delta: &[f64], t: f64, out: &mut Vec<Complex64>) {
        let s = 1.0 / t.sqrt();
        let mut moments: Vec<Vec<Complex64>> = Vec::with_capacity(self.n);
        for i in 0..self.n {
            let nu: f64 = (0..self.n).map(|k| self.l_inv[(i, k)] * delta[k]).sum::<f64>() * s;
            let mut m = Vec::new();
            gaussian_fourier_moments(nu, self.max_degree, &mut m);
            moments.push(m);
        }
        out.clear();
        for terms in &self.levels {
            let mut v = Complex64::new(0.0, 0.0);
            for (e, c) in terms {
                let mut p = *c;
                for (i, &a) in e.iter().enumerate() {
                    p *= moments[i][a as usize];
                }
                v += p;
            }
            out.push(v * self.jacobian);
        }
    }
}

/// Expand `Π_i (Σ_j B_ij ζ_j)^{e_i}` into ζ-monomials.
fn substitute(e: &[u8], b: &DMatrix<f64>) -> Vec<(Vec<u8>, f64)> {
    let n = e.len();
    let mut poly: BTreeMap<Vec<u8>, f64> = BTreeMap::from([(vec![0u8; n], 1.0)]);
    for (i, &ei) in e.iter().enumerate() {
        for _ in 0..ei {
            let mut next: BTreeMap<Vec<u8>, f64> = BTreeMap::new();
            for (m, c) in &poly {
                for j in 0..n {
                    let bij = b[(i, j)];
                    if bij == 0.0 {
                        continue;
                    }
                    let mut mm = m.clone();
                    mm[j] += 1;
                    *next.entry(mm).or_insert(0.0) += c * bij;
                }
            }
            poly = next;
        }
    }
    poly.into_iter().collect()
}

/// Options of the localized trace quadrature.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceOptions {
    /// Highest parametrix level K.
    pub k_max: usize,
    /// Periodic nodes per axis for the flat scenarios.
    pub flat_x_nodes: usize,
    /// Truncation radius of the η axes for the flat scenarios.
    pub eta_radius: f64,
    /// Gauss–Legendre nodes per radial panel on the sphere charts.
    pub radial_nodes: usize,
    /// Angular trapezoid nodes on the sphere charts.
    pub angular_nodes: usize,
    pub tolerance: f64,
}

impl TraceOptions {
    pub fn for_scenario(scenario: Scenario) -> Self {
        Self {
            k_max: if scenario.is_flat() { 0 } else { 2 },
            flat_x_nodes: 8,
            // e^{-|η|²} < 1e-16 beyond |η| = 6.1
            eta_radius: 8.0,
            radial_nodes: 16,
            angular_nodes: 64,
            tolerance: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEstimate {
    pub value: Complex64,
    pub error_estimate: f64,
    pub converged: bool,
}

/// `tr T_j(g) E_K(t)`: the localized equivariant heat-trace integral
///
/// `Σ_{k≤K} t^{(k-n)/2} Σ_γ ∫∫ e^{i[κ_γ(gx) - κ_γ(x)]·η/√t} f̄_γ(x) f_γ(gx)
///   tr[T_j(g) e_k(1, κ_γ(gx), η)] dη dx̃ / (2π)^n`,
///
/// integrated against Lebesgue measure in each chart.
pub fn equivariant_trace_parametrix(
    scenario: Scenario,
    j: usize,
    g: &GroupElement,
    t: f64,
    k_max: usize,
) -> Result<TraceEstimate> {
    let mut opts = TraceOptions::for_scenario(scenario);
    opts.k_max = k_max;
    equivariant_trace_parametrix_with(scenario, j, g, t, &opts)
}

pub fn equivariant_trace_parametrix_with(
    scenario: Scenario,
    j: usize,
    g: &GroupElement,
    t: f64,
    opts: &TraceOptions,
) -> Result<TraceEstimate> {
    if !(t > 0.0) {
        return Err(Error::InvalidInput(format!("heat time must be positive, got {t}")));
    }
    for chart in 0..scenario.chart_count() {
        laplace_symbol(scenario, j, chart)?;
    }
    if scenario.is_flat() {
        flat_trace(scenario, j, g, t, opts)
    } else {
        let engine = SphereTraceEngine::new(j, opts)?;
        let v = engine.trace(g, &[t])?;
        Ok(TraceEstimate {
            value: v[0],
            error_estimate: engine.error_hint(),
            converged: true,
        })
    }
}

fn flat_trace(
    scenario: Scenario,
    j: usize,
    g: &GroupElement,
    t: f64,
    opts: &TraceOptions,
) -> Result<TraceEstimate> {
    let n = scenario.dim();
    let geo = ModelGeometry::new(scenario);
    let chart = &geo.charts[0];
    let symbol = laplace_symbol(scenario, j, 0)?;
    let h = 2.0 * PI / opts.flat_x_nodes as f64;
    let total = opts.flat_x_nodes.pow(n as u32);
    let norm = (2.0 * PI).powi(n as i32);
    let mut value = Complex64::new(0.0, 0.0);
    let mut err = 0.0;
    let mut converged = true;
    for flat in 0..total {
        let mut rem = flat;
        let mut x = vec![0.0; n];
        for c in x.iter_mut().rev() {
            *c = h * (rem % opts.flat_x_nodes) as f64;
            rem /= opts.flat_x_nodes;
        }
        let point = ChartPoint::new(0, x.clone());
        let (image, _) = act(scenario, g, &point)?;
        let amp = chart.cutoff(&x) * chart.partition(&image.coords);
        if amp == 0.0 {
            continue;
        }
        let trace_phi = pullback_matrix(scenario, j, g, &point)?.trace();
        let delta: Vec<f64> = image
            .coords
            .iter()
            .zip(&x)
            .map(|(a, b)| periodic_representative(a - b))
            .collect();
        let r = resolvent_recursion(&symbol, &image.coords, opts.k_max, opts.k_max)?;
        let freq = delta.iter().map(|d| d.abs()).fold(0.0, f64::max) / t.sqrt();
        // trapezoid step h needs 2π/h to exceed the frequency plus the
        // Gaussian bandwidth
        let step = 2.0 * PI / (freq + 13.0);
        let nodes = ((2.0 * opts.eta_radius / step).ceil() as usize + 1).max(33);
        let spec = QuadratureSpec::new(
            vec![
                Axis::FullLine {
                    radius: opts.eta_radius,
                    nodes,
                };
                n
            ],
            opts.tolerance,
        );
        let integrand = |eta: &[f64]| -> Complex64 {
            let phase: f64 = delta.iter().zip(eta).map(|(d, e)| d * e).sum::<f64>() / t.sqrt();
            let mut s = Complex64::new(0.0, 0.0);
            for k in 0..=opts.k_max {
                let e = heat_symbol(&r, k, 1.0, eta).expect("level computed").value;
                s += e * t.powf((k as f64 - n as f64) / 2.0);
            }
            s * Complex64::from_polar(1.0, phase)
        };
        let res = integrate(integrand, &spec)?;
        converged &= res.converged;
        let w = h.powi(n as i32) * amp * trace_phi / norm;
        value += res.value * w;
        err += res.error_estimate * w.abs();
    }
    Ok(TraceEstimate {
        value,
        error_estimate: err,
        converged,
    })
}

struct SphereNode {
    chart: usize,
    radial: usize,
    angular: usize,
    coords: Vec<f64>,
    weight: f64,
    cutoff: f64,
    partition: f64,
}

/// Reusable quadrature for the sphere trace: polar Gauss–Legendre ×
/// trapezoid nodes in each stereographic chart, with heat symbols cached at
/// every node where the partition function is positive.
///
/// Rotations by multiples of `2π/angular_nodes` map nodes to nodes and reuse
/// the cache; other rotations evaluate symbols on the fly.
pub struct SphereTraceEngine {
    degree: usize,
    k_max: usize,
    angular: usize,
    radial_count: usize,
    nodes: Vec<SphereNode>,
    symbols: HashMap<(usize, usize, usize), WhitenedSymbol>,
}

impl SphereTraceEngine {
    pub fn new(degree: usize, opts: &TraceOptions) -> Result<Self> {
        let scenario = Scenario::Sphere2;
        let geo = ModelGeometry::new(scenario);
        let outer = geo.charts[0].cutoff_support_radius().expect("sphere chart");
        let inner = geo.charts[0].partition_support_radius().expect("sphere chart");
        // the partition is constant on r ≤ 1/√3, so break the panels where
        // the smooth steps switch on and off
        let breaks = [0.0, 1.0 / 3f64.sqrt(), 1.0, inner, outer];
        let gl = gauss_legendre(opts.radial_nodes);
        let mut radial = Vec::new();
        for w in breaks.windows(2) {
            let (mid, half) = (0.5 * (w[0] + w[1]), 0.5 * (w[1] - w[0]));
            for (z, wt) in gl.0.iter().zip(&gl.1) {
                radial.push((mid + half * z, half * wt));
            }
        }
        let dtheta = 2.0 * PI / opts.angular_nodes as f64;
        let mut nodes = Vec::new();
        let mut symbols = HashMap::new();
        for chart in &geo.charts {
            let symbol = laplace_symbol(scenario, degree, chart.index)?;
            for (ir, &(r, wr)) in radial.iter().enumerate() {
                for ia in 0..opts.angular_nodes {
                    let th = dtheta * ia as f64;
                    let coords = vec![r * th.cos(), r * th.sin()];
                    let node = SphereNode {
                        chart: chart.index,
                        radial: ir,
                        angular: ia,
                        cutoff: chart.cutoff(&coords),
                        partition: chart.partition(&coords),
                        weight: wr * r * dtheta,
                        coords,
                    };
                    if node.partition > 0.0 {
                        let rs = resolvent_recursion(&symbol, &node.coords, opts.k_max, opts.k_max)?;
                        symbols.insert((chart.index, ir, ia), WhitenedSymbol::new(&rs)?);
                    }
                    nodes.push(node);
                }
            }
        }
        Ok(Self {
            degree,
            k_max: opts.k_max,
            angular: opts.angular_nodes,
            radial_count: radial.len(),
            nodes,
            symbols,
        })
    }

    pub fn angular_nodes(&self) -> usize {
        self.angular
    }

    pub fn radial_nodes(&self) -> usize {
        self.radial_count
    }

    /// Heuristic size of the quadrature error of the trace at moderate t.
    pub fn error_hint(&self) -> f64 {
        1e-8
    }

    /// Equivariant trace for each t in `ts`.
    pub fn trace(&self, g: &GroupElement, ts: &[f64]) -> Result<Vec<Complex64>> {
        let scenario = Scenario::Sphere2;
        if ts.iter().any(|&t| !(t > 0.0)) {
            return Err(Error::InvalidInput("heat times must be positive".into()));
        }
        let geo = ModelGeometry::new(scenario);
        let phi = g.angles()[0];
        let steps = phi / (2.0 * PI / self.angular as f64);
        let shift = if (steps - steps.round()).abs() < 1e-9 {
            Some(steps.round() as usize % self.angular)
        } else {
            None
        };
        let n = 2.0;
        let norm = 4.0 * PI * PI;
        let mut out = vec![Complex64::new(0.0, 0.0); ts.len()];
        let mut buf = Vec::new();
        for node in &self.nodes {
            if node.cutoff == 0.0 {
                continue;
            }
            let point = ChartPoint::new(node.chart, node.coords.clone());
            let (image, _) = act(scenario, g, &point)?;
            let chart = &geo.charts[node.chart];
            let computed;
            let (partition, symbol) = match shift {
                Some(s) => {
                    let key = (node.chart, node.radial, (node.angular + s) % self.angular);
                    match self.symbols.get(&key) {
                        Some(sym) => (chart.partition(&image.coords), sym),
                        None => continue,
                    }
                }
                None => {
                    let p = chart.partition(&image.coords);
                    if p == 0.0 {
                        continue;
                    }
                    let symbol = laplace_symbol(scenario, self.degree, node.chart)?;
                    let rs = resolvent_recursion(&symbol, &image.coords, self.k_max, self.k_max)?;
                    computed = WhitenedSymbol::new(&rs)?;
                    (p, &computed)
                }
            };
            let amp = node.cutoff * partition;
            if amp == 0.0 {
                continue;
            }
            let trace_phi = pullback_matrix(scenario, self.degree, g, &point)?.trace();
            let delta = [
                image.coords[0] - node.coords[0],
                image.coords[1] - node.coords[1],
            ];
            let w = node.weight * amp * trace_phi / norm;
            for (o, &t) in out.iter_mut().zip(ts) {
                symbol.fourier(&delta, t, &mut buf);
                let mut s = Complex64::new(0.0, 0.0);
                for (k, v) in buf.iter().enumerate() {
                    s += v * t.powf((k as f64 - n) / 2.0);
                }
                *o += s * w;
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_levels_vanish() {
        for sc in [Scenario::Circle, Scenario::Torus2] {
            let s = laplace_symbol(sc, 1, 0).unwrap();
            let r = resolvent_recursion(&s, &vec![0.5; sc.dim()], 2, 2).unwrap();
            assert!(r.levels[1].terms.is_empty());
            assert!(r.levels[2].terms.is_empty());
        }
    }

    #[test]
    fn pole_orders_bounded() {
        let s = laplace_symbol(Scenario::Sphere2, 0, 0).unwrap();
        let r = resolvent_recursion(&s, &[0.4, -0.3], 2, 2).unwrap();
        assert_eq!(r.levels[0].max_pole_order(), 1);
        assert!(r.levels[1].max_pole_order() <= 3);
        assert!(r.levels[2].max_pole_order() <= 5);
        // A_{k,j} homogeneous of degree 2j - 2 - k
        for lvl in &r.levels {
            for (&j, a) in &lvl.terms {
                assert!(a.is_homogeneous(2 * j - 2 - lvl.level), "k={} j={j}", lvl.level);
            }
        }
    }

    #[test]
    fn insufficient_jet_order() {
        let s = laplace_symbol(Scenario::Sphere2, 0, 0).unwrap();
        assert!(matches!(
            resolvent_recursion(&s, &[0.4, -0.3], 2, 1),
            Err(Error::JetOrderExhausted { required: 2, available: 1, .. })
        ));
    }

    #[test]
    fn level_zero_heat_symbol() {
        let s = laplace_symbol(Scenario::Sphere2, 0, 1).unwrap();
        let r = resolvent_recursion(&s, &[0.2, 0.9], 0, 0).unwrap();
        let xi = [0.7, -1.1];
        let p2 = s.principal_value(&[0.2, 0.9], &xi).unwrap();
        let e = heat_symbol(&r, 0, 0.6, &xi).unwrap();
        assert!((e.value - (-0.6 * p2).exp()).norm() < 1e-15);
    }

    #[test]
    fn contour_spec_validation() {
        let mut c = ContourSpec::around(2.0);
        assert!(c.validate(2.0).is_ok());
        c.nodes = 63;
        assert!(c.validate(2.0).is_err());
        let c = ContourSpec::around(0.0);
        assert!(c.validate(3.0).is_err());
    }

    #[test]
    fn substitution_of_scaled_variables() {
        let b = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 3.0]);
        let s = substitute(&[2, 1], &b);
        assert_eq!(s, vec![(vec![2, 1], 12.0)]);
    }
}
