//! Lefschetz numbers of the De Rham complex: heat supertraces, the
//! Atiyah–Bott fixed-point formula, character projections over the group
//! and the constant term of the small-time expansion.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;

use crate::complexes::{de_rham, pullback_matrix};
use crate::error::{Error, Result};
use crate::geometry::{
    group_average, group_average_shifted, orbit_info, ChartPoint, GroupElement, ModelGeometry,
    Scenario,
};
use crate::numerics::fit::fit_series;
use crate::oscillatory::{leading_coefficient, Amplitude, GaussianFactor, LeadingOptions};
use crate::parametrix::{equivariant_trace_parametrix, SphereTraceEngine, TraceOptions};
use crate::spectral::{
    adaptive_cutoff, default_cutoff, heat_character_sum, isotypic_heat_trace, lefschetz_cohomology,
    spectral_family, tail_bound,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Cohomology,
    HeatSpectral,
    HeatParametrix,
    FixedPoint,
    ConstantTerm,
    TExtraction,
}

impl Method {
    pub fn tag(self) -> &'static str {
        match self {
            Method::Cohomology => "cohomology",
            Method::HeatSpectral => "heat-spectral",
            Method::HeatParametrix => "heat-parametrix",
            Method::FixedPoint => "fixed-point",
            Method::ConstantTerm => "constant-term",
            Method::TExtraction => "t-extraction",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// What a report is about: one group element, or the character `e^{ik·θ}`.
#[derive(Debug, Clone, PartialEq)]
pub enum Subject {
    Element(GroupElement),
    Character(Vec<i64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DegreeTerm {
    pub degree: usize,
    /// Unsigned contribution of this degree.
    pub value: Complex64,
    pub error_estimate: f64,
    /// Engine actually used; differs from the report method on fallback.
    pub method: Method,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LefschetzReport {
    pub scenario: Scenario,
    pub subject: Subject,
    pub method: Method,
    pub value: Complex64,
    pub error_estimate: f64,
    pub degrees: Vec<DegreeTerm>,
    /// Second evaluation by an independent route, when one exists.
    pub cross_check: Option<Complex64>,
}

impl LefschetzReport {
    fn assemble(scenario: Scenario, subject: Subject, method: Method, degrees: Vec<DegreeTerm>) -> Self {
        let value = alternating_sum(&degrees);
        let error_estimate = degrees.iter().map(|d| d.error_estimate).sum();
        Self {
            scenario,
            subject,
            method,
            value,
            error_estimate,
            degrees,
            cross_check: None,
        }
    }

    /// `Σ_j (-1)^j` of the per-degree terms.
    pub fn breakdown_sum(&self) -> Complex64 {
        alternating_sum(&self.degrees)
    }
}

fn alternating_sum(terms: &[DegreeTerm]) -> Complex64 {
    terms
        .iter()
        .map(|d| if d.degree % 2 == 0 { d.value } else { -d.value })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeatMethod {
    Spectral,
    Parametrix,
}

/// `Σ_j (-1)^j tr(T_j(g) e^{-tΔ_j})`.
///
/// The parametrix engine falls back to the spectral sum in degrees without
/// a chart symbol; the fallback is visible in the per-degree terms.
pub fn lefschetz_heat(
    scenario: Scenario,
    g: &GroupElement,
    t: f64,
    method: HeatMethod,
) -> Result<LefschetzReport> {
    check_group(scenario, g)?;
    let mut terms = Vec::new();
    for j in de_rham(scenario).degrees() {
        let spectral = || -> Result<DegreeTerm> {
            let (v, tail) = heat_character_sum(scenario, j, g, t, default_cutoff(scenario))?;
            Ok(DegreeTerm {
                degree: j,
                value: v,
                error_estimate: tail,
                method: Method::HeatSpectral,
            })
        };
        let term = match method {
            HeatMethod::Spectral => spectral()?,
            HeatMethod::Parametrix => {
                let k_max = TraceOptions::for_scenario(scenario).k_max;
                match equivariant_trace_parametrix(scenario, j, g, t, k_max) {
                    Ok(est) => DegreeTerm {
                        degree: j,
                        value: est.value,
                        error_estimate: est.error_estimate,
                        method: Method::HeatParametrix,
                    },
                    Err(Error::SpectralOracleOnly { .. }) => spectral()?,
                    Err(e) => return Err(e),
                }
            }
        };
        terms.push(term);
    }
    let tag = match method {
        HeatMethod::Spectral => Method::HeatSpectral,
        HeatMethod::Parametrix => Method::HeatParametrix,
    };
    Ok(LefschetzReport::assemble(scenario, Subject::Element(g.clone()), tag, terms))
}

fn check_group(scenario: Scenario, g: &GroupElement) -> Result<()> {
    if g.angles().len() != scenario.group_dim() {
        return Err(Error::InvalidInput(format!(
            "{scenario} needs {} group angle(s), got {}",
            scenario.group_dim(),
            g.angles().len()
        )));
    }
    Ok(())
}

/// `Σ_{x ∈ Fix(g)} Σ_j (-1)^j tr Λ^j(dg_x)ᵀ / |det(1 - dg_x)|`.
pub fn atiyah_bott(scenario: Scenario, g: &GroupElement) -> Result<LefschetzReport> {
    check_group(scenario, g)?;
    let degrees = de_rham(scenario).degrees();
    let zero = Complex64::new(0.0, 0.0);
    let mut values = vec![zero; degrees.clone().count()];
    if g.is_identity() {
        return Err(Error::NonTransversal {
            angles: g.angles().to_vec(),
            fixed_set: format!("all of {scenario}"),
        });
    }
    if scenario == Scenario::Sphere2 {
        let geo = ModelGeometry::new(scenario);
        for chart in &geo.charts {
            // the poles are the chart origins
            let pole = ChartPoint::new(chart.index, vec![0.0, 0.0]);
            let dg = pullback_matrix(scenario, 1, g, &pole)?.transpose();
            let det = (nalgebra::DMatrix::identity(2, 2) - &dg).determinant();
            if det.abs() < 1e-12 {
                return Err(Error::NonTransversal {
                    angles: g.angles().to_vec(),
                    fixed_set: "the poles (degenerate rotation)".into(),
                });
            }
            for j in degrees.clone() {
                let tr = pullback_matrix(scenario, j, g, &pole)?.trace();
                values[j] += Complex64::new(tr / det.abs(), 0.0);
            }
        }
    }
    let terms = degrees
        .map(|j| DegreeTerm {
            degree: j,
            value: values[j],
            error_estimate: 0.0,
            method: Method::FixedPoint,
        })
        .collect();
    Ok(LefschetzReport::assemble(scenario, Subject::Element(g.clone()), Method::FixedPoint, terms))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EquivariantMethod {
    Cohomology,
    /// Heat supertrace at a fixed time.
    HeatSpectral { t: f64 },
    /// Fixed-point values on a half-shifted grid of `nodes` per angle.
    FixedPoint { nodes: usize },
}

/// `L_ρ = (1/vol G) ∫_G L(T(g)) conj(ρ_k(g)) dg`.
pub fn equivariant_lefschetz(
    scenario: Scenario,
    k: &[i64],
    method: EquivariantMethod,
) -> Result<LefschetzReport> {
    check_character(scenario, k)?;
    let kmax = k.iter().map(|v| v.unsigned_abs() as usize).max().unwrap_or(0);
    let subject = Subject::Character(k.to_vec());
    let degrees: Vec<usize> = de_rham(scenario).degrees().collect();
    match method {
        EquivariantMethod::Cohomology => {
            let nodes = 2 * kmax + 4;
            let v = group_average(scenario, |g| lefschetz_cohomology(scenario, g), k, nodes);
            let terms = degrees
                .iter()
                .map(|&j| DegreeTerm {
                    degree: j,
                    value: group_average(
                        scenario,
                        |g| crate::complexes::harmonic_character(scenario, j, g),
                        k,
                        nodes,
                    ),
                    error_estimate: 0.0,
                    method: Method::Cohomology,
                })
                .collect();
            let mut r = LefschetzReport::assemble(scenario, subject, Method::Cohomology, terms);
            r.cross_check = Some(v);
            Ok(r)
        }
        EquivariantMethod::HeatSpectral { t } => {
            if !(t > 0.0) {
                return Err(Error::InvalidInput(format!("heat time must be positive, got {t}")));
            }
            let cutoff = adaptive_cutoff(scenario, t);
            // characters of modes up to the cutoff are integrated exactly
            let nodes = 2 * cutoff + 2 + kmax;
            let mut terms = Vec::new();
            for &j in &degrees {
                let family = spectral_family(scenario, j, cutoff)?;
                let tail = tail_bound(scenario, j, t, cutoff)?;
                let v = group_average(scenario, |g| family.heat_sum(g, t), k, nodes);
                terms.push(DegreeTerm {
                    degree: j,
                    value: v,
                    error_estimate: tail,
                    method: Method::HeatSpectral,
                });
            }
            Ok(LefschetzReport::assemble(scenario, subject, Method::HeatSpectral, terms))
        }
        EquivariantMethod::FixedPoint { nodes } => {
            if nodes < 2 * kmax + 2 {
                return Err(Error::InvalidInput(format!(
                    "{nodes} group nodes cannot resolve the character index {kmax}"
                )));
            }
            let per_degree = |g: &GroupElement| -> Result<Vec<Complex64>> {
                match atiyah_bott(scenario, g) {
                    Ok(r) => Ok(r.degrees.iter().map(|d| d.value).collect()),
                    // measure-zero set: use the cohomological value there
                    Err(Error::NonTransversal { .. }) => Ok(degrees
                        .iter()
                        .map(|&j| crate::complexes::harmonic_character(scenario, j, g))
                        .collect()),
                    Err(e) => Err(e),
                }
            };
            let mut failure = None;
            let mut terms = Vec::new();
            for &j in &degrees {
                let v = group_average_shifted(
                    scenario,
                    |g| match per_degree(g) {
                        Ok(v) => v[j],
                        Err(e) => {
                            failure = Some(e);
                            Complex64::new(0.0, 0.0)
                        }
                    },
                    k,
                    nodes,
                    0.5,
                );
                terms.push(DegreeTerm {
                    degree: j,
                    value: v,
                    error_estimate: 0.0,
                    method: Method::FixedPoint,
                });
            }
            if let Some(e) = failure {
                return Err(e);
            }
            Ok(LefschetzReport::assemble(scenario, subject, Method::FixedPoint, terms))
        }
    }
}

fn check_character(scenario: Scenario, k: &[i64]) -> Result<()> {
    if k.len() != scenario.group_dim() {
        return Err(Error::InvalidInput(format!(
            "{scenario} characters need {} index entries, got {}",
            scenario.group_dim(),
            k.len()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConstantTermMode {
    /// Single stationary-phase coefficient; needs `n = κ`.
    Exact,
    /// Fit of the localized heat trace on a grid of times.
    Extraction { ts: Vec<f64> },
}

/// Default time grid of the extraction mode.
pub const EXTRACTION_TIMES: [f64; 7] = [0.005, 0.0075, 0.01, 0.015, 0.02, 0.03, 0.05];

/// Group nodes per angle for the extraction mode; a divisor of the sphere
/// engine's angular grid, so every rotation reuses cached symbols.
pub const EXTRACTION_GROUP_NODES: usize = 64;

/// Constant term in t of the ρ-projected heat supertrace.
///
/// Exact mode: `(2π)^{κ-n}/vol G · Σ_j (-1)^j Q₀(a_j)`, with `Q₀` the
/// stationary-phase leading coefficient of the degree-j amplitude restricted
/// to the critical set. Degree 0 is also evaluated by integrating over the
/// zero level of the momentum map against inverse orbit volumes; the two must
/// agree. Extraction mode fits powers `t^{(m-(n-κ))/2}`, `m = 0..=3`.
pub fn main_theorem_constant_term(
    scenario: Scenario,
    k: &[i64],
    mode: &ConstantTermMode,
    degrees: &[usize],
) -> Result<LefschetzReport> {
    check_character(scenario, k)?;
    let all: Vec<usize> = de_rham(scenario).degrees().collect();
    let selected: Vec<usize> = if degrees.is_empty() {
        all.clone()
    } else {
        for &j in degrees {
            if !all.contains(&j) {
                return Err(Error::InvalidInput(format!("{scenario} has no {j}-forms")));
            }
        }
        degrees.to_vec()
    };
    let info = orbit_info(scenario);
    let codim = scenario.dim() - info.kappa;
    let subject = Subject::Character(k.to_vec());
    match mode {
        ConstantTermMode::Exact => {
            if codim != 0 {
                return Err(Error::ExactModeUnavailable { codim });
            }
            let n = scenario.dim();
            let prefactor = (2.0 * PI).powi(info.kappa as i32 - n as i32) / scenario.group_volume();
            let mut terms = Vec::new();
            let mut cross = None;
            for &j in &selected {
                let amp = restricted_amplitude(scenario, j, k);
                let l0 = leading_coefficient(&amp, &LeadingOptions::default())?;
                let value = l0.value * prefactor;
                if j == 0 {
                    let reduced = orbit_reduced_degree0(scenario, k);
                    if (reduced - value).norm() > 1e-6 {
                        return Err(Error::InvalidInput(format!(
                            "orbit-reduced constant term {reduced} disagrees with {value}"
                        )));
                    }
                    cross = Some(reduced);
                }
                terms.push(DegreeTerm {
                    degree: j,
                    value,
                    error_estimate: l0.error_estimate * prefactor + 1e-12,
                    method: Method::ConstantTerm,
                });
            }
            let mut r = LefschetzReport::assemble(scenario, subject, Method::ConstantTerm, terms);
            r.cross_check = cross;
            Ok(r)
        }
        ConstantTermMode::Extraction { ts } => {
            if ts.len() < 4 {
                return Err(Error::TooFewSamples {
                    required: 4,
                    got: ts.len(),
                });
            }
            let exponents: Vec<f64> = (0..4).map(|m| (m as f64 - codim as f64) / 2.0).collect();
            let zero_col = exponents.iter().position(|&e| e == 0.0).expect("integer power present");
            let mut terms = Vec::new();
            for &j in &selected {
                let (samples, method) = projected_trace_samples(scenario, j, k, ts)?;
                let fit = fit_series(&samples, &exponents)?;
                let reduced = fit_series(&samples[..samples.len() - 1], &exponents)
                    .map(|f| f[zero_col])
                    .unwrap_or(fit[zero_col]);
                terms.push(DegreeTerm {
                    degree: j,
                    value: Complex64::new(fit[zero_col], 0.0),
                    error_estimate: (fit[zero_col] - reduced).abs(),
                    method,
                });
            }
            Ok(LefschetzReport::assemble(scenario, subject, Method::TExtraction, terms))
        }
    }
}

/// Degree-j amplitude `f̄(x) f(gx) tr[T_j(g) e₀(1, gx, ξ)] conj ρ_k(g)` on
/// a flat torus, where `e₀ = e^{-|ξ|²}` and the pullback is the identity.
fn restricted_amplitude(scenario: Scenario, j: usize, k: &[i64]) -> Amplitude {
    let rank = de_rham(scenario).ranks[j] as f64;
    let n = scenario.dim();
    let k = k.to_vec();
    Amplitude::gaussian(scenario, "restricted-heat-level0", move |_, _, angles| {
        let phase: f64 = angles.iter().zip(&k).map(|(a, &ki)| a * ki as f64).sum();
        GaussianFactor {
            prefactor: Complex64::from_polar(rank, -phase),
            form: nalgebra::DMatrix::identity(n, n),
        }
    })
}

/// `(2π)^{κ-n} [π_ρ|H : 1] ∫_{Reg Ξ} tr e₀ / vol O dx̃` for functions on a
/// free torus action, where `Reg Ξ` is the zero section.
fn orbit_reduced_degree0(scenario: Scenario, k: &[i64]) -> Complex64 {
    let info = orbit_info(scenario);
    let n = scenario.dim();
    let nodes: usize = 8;
    let h = 2.0 * PI / nodes as f64;
    let mut sum = 0.0;
    for flat in 0..nodes.pow(n as u32) {
        let mut rem = flat;
        let mut x = vec![0.0; n];
        for c in x.iter_mut() {
            *c = h * (rem % nodes) as f64;
            rem /= nodes;
        }
        let p = ChartPoint::new(0, x);
        // tr e₀(1, x, 0) = 1 on functions
        sum += h.powi(n as i32) / info.orbit_volume(&p, &vec![0.0; n]);
    }
    let mult = info.multiplicity(k) as f64;
    Complex64::new((2.0 * PI).powi(info.kappa as i32 - n as i32) * mult * sum, 0.0)
}

/// `(t, (1/vol G) ∫ tr(T_j(g) E(t)) conj ρ_k(g) dg)` on the grid, from the
/// parametrix where a chart symbol exists and from the spectrum otherwise.
fn projected_trace_samples(
    scenario: Scenario,
    j: usize,
    k: &[i64],
    ts: &[f64],
) -> Result<(Vec<(f64, f64)>, Method)> {
    let nodes = EXTRACTION_GROUP_NODES;
    let values: Vec<f64> = match scenario {
        Scenario::Sphere2 if j == 0 => {
            let engine = SphereTraceEngine::new(0, &TraceOptions::for_scenario(scenario))?;
            let mut acc = vec![Complex64::new(0.0, 0.0); ts.len()];
            for m in 0..nodes {
                let phi = 2.0 * PI * m as f64 / nodes as f64;
                let tr = engine.trace(&GroupElement::new(vec![phi]), ts)?;
                let c = Complex64::from_polar(1.0, -(k[0] as f64) * phi);
                for (a, v) in acc.iter_mut().zip(tr) {
                    *a += v * c;
                }
            }
            acc.iter().map(|v| v.re / nodes as f64).collect()
        }
        Scenario::Sphere2 => ts
            .iter()
            .map(|&t| isotypic_heat_trace(scenario, j, k, t, default_cutoff(scenario)).map(|v| v.0))
            .collect::<Result<_>>()?,
        _ => {
            let mut out = Vec::with_capacity(ts.len());
            for &t in ts {
                let mut failure = None;
                let v = group_average(
                    scenario,
                    |g| match equivariant_trace_parametrix(scenario, j, g, t, 0) {
                        Ok(e) => e.value,
                        Err(e) => {
                            failure = Some(e);
                            Complex64::new(0.0, 0.0)
                        }
                    },
                    k,
                    16,
                );
                if let Some(e) = failure {
                    return Err(e);
                }
                out.push(v.re);
            }
            out
        }
    };
    let method = if scenario == Scenario::Sphere2 && j > 0 {
        Method::HeatSpectral
    } else {
        Method::HeatParametrix
    };
    Ok((ts.iter().copied().zip(values).collect(), method))
}

/// Constant term of `(1/vol G) ∫ tr(T_j(g) e^{-tΔ_j}) conj ρ_k(g) dg` from
/// the spectrum alone, fitted with the same powers of t as the extraction
/// mode.
pub fn spectral_constant_term(scenario: Scenario, j: usize, k: &[i64], ts: &[f64]) -> Result<f64> {
    check_character(scenario, k)?;
    let codim = scenario.dim() - orbit_info(scenario).kappa;
    let exponents: Vec<f64> = (0..4).map(|m| (m as f64 - codim as f64) / 2.0).collect();
    let samples = ts
        .iter()
        .map(|&t| Ok((t, isotypic_heat_trace(scenario, j, k, t, default_cutoff(scenario))?.0)))
        .collect::<Result<Vec<_>>>()?;
    let fit = fit_series(&samples, &exponents)?;
    Ok(fit[exponents.iter().position(|&e| e == 0.0).expect("integer power present")])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_fixed_points() {
        let r = atiyah_bott(Scenario::Sphere2, &GroupElement::new(vec![1.0])).unwrap();
        assert!((r.value.re - 2.0).abs() < 1e-12);
        assert!((r.breakdown_sum() - r.value).norm() < 1e-12);
        assert!(matches!(
            atiyah_bott(Scenario::Sphere2, &GroupElement::identity(1)),
            Err(Error::NonTransversal { .. })
        ));
    }

    #[test]
    fn free_actions_have_no_fixed_points() {
        let r = atiyah_bott(Scenario::Torus2, &GroupElement::new(vec![0.3, 0.0])).unwrap();
        assert_eq!(r.value, Complex64::new(0.0, 0.0));
        let r = atiyah_bott(Scenario::Circle, &GroupElement::new(vec![2.0])).unwrap();
        assert_eq!(r.value, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn exact_mode_rejected_on_sphere() {
        assert!(matches!(
            main_theorem_constant_term(Scenario::Sphere2, &[0], &ConstantTermMode::Exact, &[]),
            Err(Error::ExactModeUnavailable { codim: 1 })
        ));
    }

    #[test]
    fn sphere_heat_fallback_is_recorded() {
        let r = lefschetz_heat(Scenario::Sphere2, &GroupElement::new(vec![0.7]), 0.3, HeatMethod::Parametrix).unwrap();
        assert_eq!(r.degrees[0].method, Method::HeatParametrix);
        assert_eq!(r.degrees[1].method, Method::HeatSpectral);
    }
}
