//! Model manifolds with torus actions: atlases, metric and partition jets,
//! the group action, momentum map, Haar averages and orbit-type data.
//!
//! Three scenarios are built in:
//!
//! * `Circle`: S¹ = ℝ/2πℤ rotated by S¹.
//! * `Torus2`: the flat torus T² translated by T².
//! * `Sphere2`: the round unit sphere rotated about its polar axis.
//!
//! The flat scenarios use one periodic chart. The sphere uses the north and
//! south stereographic charts `x̃ = (X, Y)/(1 ± Z)`; both carry the metric
//! `4/(1+|x̃|²)² δ` and on both the rotation by φ acts as the planar rotation
//! by φ.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::jet::RealJet;

/// Coordinate radius of each sphere chart's domain.
pub const SPHERE_CHART_RADIUS: f64 = 4.0;
/// `f_N = S((Z + a)/(2a))`: equal to 1 on `Z ≥ a`, supported in `Z > -a`.
const PARTITION_A: f64 = 0.5;
/// `f̄_N = S((Z + b)/(b - a))`: equal to 1 on `Z ≥ -a`, supported in `Z > -b`.
const CUTOFF_B: f64 = 0.75;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scenario {
    Circle,
    Torus2,
    Sphere2,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [Scenario::Circle, Scenario::Torus2, Scenario::Sphere2];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Circle => "circle",
            Scenario::Torus2 => "torus2",
            Scenario::Sphere2 => "sphere2",
        }
    }

    /// Manifold dimension n.
    pub fn dim(self) -> usize {
        match self {
            Scenario::Circle => 1,
            Scenario::Torus2 | Scenario::Sphere2 => 2,
        }
    }

    /// Group dimension d.
    pub fn group_dim(self) -> usize {
        match self {
            Scenario::Circle | Scenario::Sphere2 => 1,
            Scenario::Torus2 => 2,
        }
    }

    /// Volume of G for Lebesgue measure on the angles.
    pub fn group_volume(self) -> f64 {
        (2.0 * PI).powi(self.group_dim() as i32)
    }

    pub fn chart_count(self) -> usize {
        match self {
            Scenario::Sphere2 => 2,
            _ => 1,
        }
    }

    pub fn is_flat(self) -> bool {
        !matches!(self, Scenario::Sphere2)
    }

    /// Riemannian volume of M.
    pub fn volume(self) -> f64 {
        match self {
            Scenario::Circle => 2.0 * PI,
            Scenario::Torus2 => 4.0 * PI * PI,
            Scenario::Sphere2 => 4.0 * PI,
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| {
                Error::InvalidInput(format!(
                    "unknown scenario {s:?}; expected one of circle, torus2, sphere2"
                ))
            })
    }
}

/// A torus element given by its angles, reduced to `[0, 2π)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupElement {
    angles: Vec<f64>,
}

impl GroupElement {
    pub fn new(angles: Vec<f64>) -> Self {
        Self {
            angles: angles.into_iter().map(wrap_angle).collect(),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            angles: vec![0.0; dim],
        }
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn compose(&self, other: &Self) -> Self {
        Self::new(
            self.angles
                .iter()
                .zip(&other.angles)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    pub fn inverse(&self) -> Self {
        Self::new(self.angles.iter().map(|a| -a).collect())
    }

    pub fn is_identity(&self) -> bool {
        self.angles.iter().all(|&a| a == 0.0)
    }
}

/// Reduce to `[0, 2π)`.
pub fn wrap_angle(a: f64) -> f64 {
    let r = a.rem_euclid(2.0 * PI);
    if r >= 2.0 * PI {
        0.0
    } else {
        r
    }
}

/// Representative of `a` modulo 2π in `(-π, π]`.
pub fn periodic_representative(a: f64) -> f64 {
    let r = wrap_angle(a);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChartPoint {
    pub chart: usize,
    pub coords: Vec<f64>,
}

impl ChartPoint {
    pub fn new(chart: usize, coords: Vec<f64>) -> Self {
        Self { chart, coords }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChartKind {
    /// Periodic coordinates on `[0, 2π)^n`.
    Periodic,
    /// Stereographic projection from the south pole (north chart).
    North,
    /// Stereographic projection from the north pole (south chart).
    South,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    pub index: usize,
    pub kind: ChartKind,
    pub dim: usize,
}

/// Smooth step: 0 for `u ≤ 0`, 1 for `u ≥ 1`, `φ(u)/(φ(u)+φ(1-u))` between,
/// with `φ(u) = e^{-1/u}`.
pub fn smooth_step(u: &RealJet) -> RealJet {
    let v = u.value();
    let (n, order) = (u.nvars(), u.order());
    if v <= 0.0 {
        return RealJet::constant(n, order, 0.0);
    }
    if v >= 1.0 {
        return RealJet::constant(n, order, 1.0);
    }
    let a = u.recip().scale(-1.0).exp();
    let one_minus = u.scale(-1.0).add_scalar(1.0);
    let b = one_minus.recip().scale(-1.0).exp();
    &a / &(&a + &b)
}

impl Chart {
    /// Whether `coords` lies in the chart domain.
    pub fn contains(&self, coords: &[f64]) -> bool {
        coords.len() == self.dim
            && coords.iter().all(|c| c.is_finite())
            && match self.kind {
                ChartKind::Periodic => true,
                ChartKind::North | ChartKind::South => {
                    norm_sq(coords) <= SPHERE_CHART_RADIUS * SPHERE_CHART_RADIUS
                }
            }
    }

    fn check(&self, coords: &[f64]) -> Result<()> {
        if self.contains(coords) {
            Ok(())
        } else {
            Err(Error::OutsideChart {
                chart: self.index,
                coords: coords.to_vec(),
            })
        }
    }

    /// Conformal factor `c` with `g = c δ` as a jet in the coordinates.
    fn conformal_factor(&self, x: &[RealJet]) -> RealJet {
        let n = x[0].nvars();
        let order = x[0].order();
        match self.kind {
            ChartKind::Periodic => RealJet::constant(n, order, 1.0),
            ChartKind::North | ChartKind::South => {
                let one_plus = radius_sq_jet(x).add_scalar(1.0);
                one_plus.powi(2).recip().scale(4.0)
            }
        }
    }

    /// Metric matrix jets `g_ij` at `coords`.
    pub fn metric_jet(&self, coords: &[f64], order: usize) -> Result<Vec<Vec<RealJet>>> {
        self.check(coords)?;
        let x = RealJet::variables(coords, order);
        let c = self.conformal_factor(&x);
        Ok(diagonal(&c, self.dim))
    }

    /// Inverse metric jets `g^ij` at `coords`.
    pub fn inverse_metric_jet(&self, coords: &[f64], order: usize) -> Result<Vec<Vec<RealJet>>> {
        self.check(coords)?;
        let x = RealJet::variables(coords, order);
        let inv = match self.kind {
            ChartKind::Periodic => RealJet::constant(self.dim, order, 1.0),
            ChartKind::North | ChartKind::South => {
                radius_sq_jet(&x).add_scalar(1.0).powi(2).scale(0.25)
            }
        };
        Ok(diagonal(&inv, self.dim))
    }

    /// Density factor `β = √det g` as a jet.
    pub fn density_jet(&self, coords: &[f64], order: usize) -> Result<RealJet> {
        self.check(coords)?;
        let x = RealJet::variables(coords, order);
        Ok(self.conformal_factor(&x).powi(self.dim as u32).sqrt())
    }

    pub fn metric(&self, coords: &[f64]) -> Result<DMatrix<f64>> {
        let g = self.metric_jet(coords, 0)?;
        Ok(DMatrix::from_fn(self.dim, self.dim, |i, j| g[i][j].value()))
    }

    pub fn density(&self, coords: &[f64]) -> Result<f64> {
        Ok(self.density_jet(coords, 0)?.value())
    }

    /// Height function `Z` of the sphere expressed in this chart.
    fn height(&self, x: &[RealJet]) -> RealJet {
        let r2 = radius_sq_jet(x);
        let z = &r2.scale(-1.0).add_scalar(1.0) / &r2.add_scalar(1.0);
        match self.kind {
            ChartKind::South => z.scale(-1.0),
            _ => z,
        }
    }

    /// Partition-of-unity function `f_γ` applied to coordinate jets.
    pub fn partition_of(&self, x: &[RealJet]) -> RealJet {
        match self.kind {
            ChartKind::Periodic => RealJet::constant(x[0].nvars(), x[0].order(), 1.0),
            ChartKind::North | ChartKind::South => {
                // Z measured towards this chart's own pole
                let z = self.own_height(x);
                smooth_step(&z.add_scalar(PARTITION_A).scale(0.5 / PARTITION_A))
            }
        }
    }

    /// Cutoff `f̄_γ`, equal to 1 on the support of `f_γ`.
    pub fn cutoff_of(&self, x: &[RealJet]) -> RealJet {
        match self.kind {
            ChartKind::Periodic => RealJet::constant(x[0].nvars(), x[0].order(), 1.0),
            ChartKind::North | ChartKind::South => {
                let z = self.own_height(x);
                smooth_step(&z.add_scalar(CUTOFF_B).scale(1.0 / (CUTOFF_B - PARTITION_A)))
            }
        }
    }

    fn own_height(&self, x: &[RealJet]) -> RealJet {
        let z = self.height(x);
        match self.kind {
            ChartKind::South => z.scale(-1.0),
            _ => z,
        }
    }

    pub fn partition_jet(&self, coords: &[f64], order: usize) -> Result<RealJet> {
        self.check(coords)?;
        Ok(self.partition_of(&RealJet::variables(coords, order)))
    }

    pub fn cutoff_jet(&self, coords: &[f64], order: usize) -> Result<RealJet> {
        self.check(coords)?;
        Ok(self.cutoff_of(&RealJet::variables(coords, order)))
    }

    pub fn partition(&self, coords: &[f64]) -> f64 {
        scalar_of(|x| self.partition_of(x), coords)
    }

    pub fn cutoff(&self, coords: &[f64]) -> f64 {
        scalar_of(|x| self.cutoff_of(x), coords)
    }

    /// Coordinate radius beyond which the cutoff vanishes.
    pub fn cutoff_support_radius(&self) -> Option<f64> {
        match self.kind {
            ChartKind::Periodic => None,
            // Z = -b  ⇔  r² = (1 + b)/(1 - b)
            _ => Some(((1.0 + CUTOFF_B) / (1.0 - CUTOFF_B)).sqrt()),
        }
    }

    /// Coordinate radius beyond which the partition function vanishes.
    pub fn partition_support_radius(&self) -> Option<f64> {
        match self.kind {
            ChartKind::Periodic => None,
            _ => Some(((1.0 + PARTITION_A) / (1.0 - PARTITION_A)).sqrt()),
        }
    }
}

fn scalar_of(f: impl Fn(&[RealJet]) -> RealJet, coords: &[f64]) -> f64 {
    f(&RealJet::variables(coords, 0)).value()
}

fn diagonal(c: &RealJet, dim: usize) -> Vec<Vec<RealJet>> {
    let zero = c.scale(0.0);
    (0..dim)
        .map(|i| {
            (0..dim)
                .map(|j| if i == j { c.clone() } else { zero.clone() })
                .collect()
        })
        .collect()
}

fn radius_sq_jet(x: &[RealJet]) -> RealJet {
    let mut r2 = &x[0] * &x[0];
    for xi in &x[1..] {
        r2 = &r2 + &(xi * xi);
    }
    r2
}

fn norm_sq(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelGeometry {
    pub scenario: Scenario,
    pub dim: usize,
    pub group_dim: usize,
    pub group_volume: f64,
    pub charts: Vec<Chart>,
}

impl ModelGeometry {
    pub fn new(scenario: Scenario) -> Self {
        let dim = scenario.dim();
        let charts = match scenario {
            Scenario::Sphere2 => vec![
                Chart {
                    index: 0,
                    kind: ChartKind::North,
                    dim,
                },
                Chart {
                    index: 1,
                    kind: ChartKind::South,
                    dim,
                },
            ],
            _ => vec![Chart {
                index: 0,
                kind: ChartKind::Periodic,
                dim,
            }],
        };
        Self {
            scenario,
            dim,
            group_dim: scenario.group_dim(),
            group_volume: scenario.group_volume(),
            charts,
        }
    }

    pub fn chart(&self, index: usize) -> Result<&Chart> {
        self.charts
            .get(index)
            .ok_or_else(|| Error::InvalidInput(format!("{} has no chart {index}", self.scenario)))
    }

    /// Express `point` in chart `target`.
    pub fn transition(&self, point: &ChartPoint, target: usize) -> Result<ChartPoint> {
        let (p, _) = self.transition_with_jacobian(point, target)?;
        Ok(p)
    }

    /// Express `point` in chart `target`, with the Jacobian of the change of
    /// coordinates.
    pub fn transition_with_jacobian(
        &self,
        point: &ChartPoint,
        target: usize,
    ) -> Result<(ChartPoint, DMatrix<f64>)> {
        let source = self.chart(point.chart)?;
        source.check(&point.coords)?;
        let dest = self.chart(target)?;
        let n = self.dim;
        if point.chart == target {
            return Ok((point.clone(), DMatrix::identity(n, n)));
        }
        // the two sphere charts are related by inversion x ↦ x/|x|²
        let r2 = norm_sq(&point.coords);
        let outside = || Error::OutsideChart {
            chart: target,
            coords: point.coords.clone(),
        };
        if r2 == 0.0 {
            return Err(outside());
        }
        let image: Vec<f64> = point.coords.iter().map(|c| c / r2).collect();
        if !dest.contains(&image) {
            return Err(outside());
        }
        let jac = DMatrix::from_fn(n, n, |i, j| {
            let delta = if i == j { 1.0 } else { 0.0 };
            (delta * r2 - 2.0 * point.coords[i] * point.coords[j]) / (r2 * r2)
        });
        Ok((ChartPoint::new(target, image), jac))
    }

    /// Point of the embedded sphere `(X, Y, Z)` for a sphere chart point.
    pub fn embed(&self, point: &ChartPoint) -> Result<[f64; 3]> {
        if self.scenario != Scenario::Sphere2 {
            return Err(Error::InvalidInput("only the sphere is embedded".into()));
        }
        let chart = self.chart(point.chart)?;
        chart.check(&point.coords)?;
        let (x, y) = (point.coords[0], point.coords[1]);
        let r2 = x * x + y * y;
        let z = (1.0 - r2) / (1.0 + r2);
        let s = 2.0 / (1.0 + r2);
        Ok(match chart.kind {
            ChartKind::South => [s * x, s * y, -z],
            _ => [s * x, s * y, z],
        })
    }

    /// The chart point of an embedded sphere point, in the chart whose
    /// coordinates are smallest.
    pub fn locate(&self, p: [f64; 3]) -> Result<ChartPoint> {
        if self.scenario != Scenario::Sphere2 {
            return Err(Error::InvalidInput("only the sphere is embedded".into()));
        }
        let norm = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
        if !(norm > 0.0) {
            return Err(Error::InvalidInput(format!("{p:?} is not on the sphere")));
        }
        let [x, y, z] = [p[0] / norm, p[1] / norm, p[2] / norm];
        Ok(if z >= 0.0 {
            ChartPoint::new(0, vec![x / (1.0 + z), y / (1.0 + z)])
        } else {
            ChartPoint::new(1, vec![x / (1.0 - z), y / (1.0 - z)])
        })
    }
}

/// Chart coordinates of `g·x`, computed on jets so that derivatives in both
/// the point and the group angles are available.
///
/// For the flat scenarios the result is not reduced modulo 2π.
pub fn act_coords_jet(scenario: Scenario, angles: &[RealJet], x: &[RealJet]) -> Vec<RealJet> {
    match scenario {
        Scenario::Circle | Scenario::Torus2 => {
            x.iter().zip(angles).map(|(xi, a)| xi + a).collect()
        }
        Scenario::Sphere2 => {
            let (c, s) = (angles[0].cos(), angles[0].sin());
            vec![
                &(&c * &x[0]) - &(&s * &x[1]),
                &(&s * &x[0]) + &(&c * &x[1]),
            ]
        }
    }
}

/// Image of a chart point under `g` together with the differential of `g`
/// in chart coordinates.
pub fn act(
    scenario: Scenario,
    g: &GroupElement,
    point: &ChartPoint,
) -> Result<(ChartPoint, DMatrix<f64>)> {
    let geo = ModelGeometry::new(scenario);
    let chart = geo.chart(point.chart)?;
    chart.check(&point.coords)?;
    if g.angles().len() != scenario.group_dim() {
        return Err(Error::InvalidInput(format!(
            "{scenario} group elements have {} angles, got {}",
            scenario.group_dim(),
            g.angles().len()
        )));
    }
    let n = scenario.dim();
    let angles: Vec<RealJet> = g
        .angles()
        .iter()
        .map(|&a| RealJet::constant(n, 1, a))
        .collect();
    let x = RealJet::variables(&point.coords, 1);
    let image = act_coords_jet(scenario, &angles, &x);
    let mut coords: Vec<f64> = image.iter().map(RealJet::value).collect();
    if chart.kind == ChartKind::Periodic {
        coords = coords.into_iter().map(wrap_angle).collect();
    }
    let dg = DMatrix::from_fn(n, n, |i, j| image[i].gradient()[j]);
    Ok((ChartPoint::new(point.chart, coords), dg))
}

/// Fundamental vector fields `X_a^#(x) = d/dt exp(-tX_a)·x |_{t=0}`, one per
/// Lie-algebra basis vector.
///
/// The basis is oriented so that `exp(-tX_a)` is the rotation by `+t` in the
/// a-th angle, which makes each field the unit angular field.
pub fn fundamental_fields(scenario: Scenario, point: &ChartPoint) -> Result<Vec<Vec<f64>>> {
    let geo = ModelGeometry::new(scenario);
    geo.chart(point.chart)?.check(&point.coords)?;
    Ok(match scenario {
        Scenario::Circle => vec![vec![1.0]],
        Scenario::Torus2 => vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        Scenario::Sphere2 => vec![vec![-point.coords[1], point.coords[0]]],
    })
}

/// Momentum map components `J_{X_a}(x, ξ) = ξ(X_a^#(x))`.
pub fn momentum(scenario: Scenario, point: &ChartPoint, xi: &[f64]) -> Result<Vec<f64>> {
    if xi.len() != scenario.dim() {
        return Err(Error::InvalidInput(format!(
            "covector has {} components, {scenario} needs {}",
            xi.len(),
            scenario.dim()
        )));
    }
    Ok(fundamental_fields(scenario, point)?
        .iter()
        .map(|v| v.iter().zip(xi).map(|(a, b)| a * b).sum())
        .collect())
}

/// `(1/vol G) ∫_G f(g) conj(ρ_k(g)) dg` with `ρ_k(g) = e^{i k·θ}`, by the
/// periodic trapezoid rule with `nodes` points per angle.
pub fn group_average<F>(scenario: Scenario, f: F, k: &[i64], nodes: usize) -> Complex64
where
    F: FnMut(&GroupElement) -> Complex64,
{
    group_average_shifted(scenario, f, k, nodes, 0.0)
}

/// As [`group_average`], with every node shifted by `shift` grid spacings.
pub fn group_average_shifted<F>(
    scenario: Scenario,
    mut f: F,
    k: &[i64],
    nodes: usize,
    shift: f64,
) -> Complex64
where
    F: FnMut(&GroupElement) -> Complex64,
{
    let d = scenario.group_dim();
    assert_eq!(k.len(), d, "character index must have one entry per angle");
    let h = 2.0 * PI / nodes as f64;
    let total = nodes.pow(d as u32);
    let mut sum = Complex64::new(0.0, 0.0);
    for flat in 0..total {
        let mut rem = flat;
        let mut angles = vec![0.0; d];
        for a in angles.iter_mut().rev() {
            *a = h * ((rem % nodes) as f64 + shift);
            rem /= nodes;
        }
        let phase: f64 = angles.iter().zip(k).map(|(a, &ki)| a * ki as f64).sum();
        let g = GroupElement::new(angles);
        sum += f(&g) * Complex64::from_polar(1.0, -phase);
    }
    sum / total as f64
}

/// Principal-orbit data of a scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct PrincipalOrbitData {
    pub scenario: Scenario,
    /// Dimension κ of a principal orbit.
    pub kappa: usize,
    /// Length Λ of the longest chain of isotropy types.
    pub lambda: usize,
    /// Order of the principal isotropy group H.
    pub isotropy_order: usize,
}

impl PrincipalOrbitData {
    /// `[π_ρ|H : 1]` for the character with index `k`.
    ///
    /// H is trivial in every built-in scenario, so each character restricts
    /// to the trivial representation once.
    pub fn multiplicity(&self, _k: &[i64]) -> u32 {
        1
    }

    /// Volume of the orbit through `(x, η)` in `T*M`, measured in the chart
    /// coordinates `(x̃, η)` with their Euclidean metric.
    pub fn orbit_volume(&self, point: &ChartPoint, eta: &[f64]) -> f64 {
        match self.scenario {
            Scenario::Circle => 2.0 * PI,
            Scenario::Torus2 => 4.0 * PI * PI,
            Scenario::Sphere2 => {
                2.0 * PI * (norm_sq(&point.coords) + norm_sq(eta)).sqrt()
            }
        }
    }
}

pub fn orbit_info(scenario: Scenario) -> PrincipalOrbitData {
    let (kappa, lambda) = match scenario {
        Scenario::Circle => (1, 1),
        Scenario::Torus2 => (2, 1),
        // principal circles plus the two fixed poles
        Scenario::Sphere2 => (1, 2),
    };
    PrincipalOrbitData {
        scenario,
        kappa,
        lambda,
        isotropy_order: 1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_rotation() {
        let (p, dg) = act(
            Scenario::Circle,
            &GroupElement::new(vec![PI / 2.0]),
            &ChartPoint::new(0, vec![0.0]),
        )
        .unwrap();
        assert!((p.coords[0] - PI / 2.0).abs() < 1e-15);
        assert_eq!(dg[(0, 0)], 1.0);
    }

    #[test]
    fn sphere_rotation_is_planar() {
        let phi = 0.8;
        let (p, dg) = act(
            Scenario::Sphere2,
            &GroupElement::new(vec![phi]),
            &ChartPoint::new(0, vec![0.3, -0.4]),
        )
        .unwrap();
        assert!((p.coords[0] - (phi.cos() * 0.3 + phi.sin() * 0.4)).abs() < 1e-15);
        assert!((dg[(0, 1)] + phi.sin()).abs() < 1e-15);
        assert!((dg[(1, 0)] - phi.sin()).abs() < 1e-15);
    }

    #[test]
    fn identity_acts_trivially() {
        for sc in Scenario::ALL {
            let p = ChartPoint::new(0, vec![0.7; sc.dim()]);
            let (q, dg) = act(sc, &GroupElement::identity(sc.group_dim()), &p).unwrap();
            assert_eq!(q, p);
            assert_eq!(dg, DMatrix::identity(sc.dim(), sc.dim()));
        }
    }

    #[test]
    fn outside_chart_rejected() {
        let r = act(
            Scenario::Sphere2,
            &GroupElement::new(vec![0.1]),
            &ChartPoint::new(0, vec![5.0, 0.0]),
        );
        assert!(matches!(r, Err(Error::OutsideChart { .. })));
    }

    #[test]
    fn poles_have_zero_momentum() {
        let j = momentum(Scenario::Sphere2, &ChartPoint::new(1, vec![0.0, 0.0]), &[3.0, -2.0]).unwrap();
        assert_eq!(j, vec![0.0]);
        let j = momentum(Scenario::Circle, &ChartPoint::new(0, vec![1.0]), &[2.5]).unwrap();
        assert_eq!(j, vec![2.5]);
    }

    #[test]
    fn group_average_orthogonality() {
        for m in -3i64..=3 {
            for k in -3i64..=3 {
                let v = group_average(
                    Scenario::Circle,
                    |g| Complex64::from_polar(1.0, m as f64 * g.angles()[0]),
                    &[k],
                    16,
                );
                let expected = if m == k { 1.0 } else { 0.0 };
                assert!((v - expected).norm() < 1e-14);
            }
        }
        let one = group_average(Scenario::Torus2, |_| Complex64::new(1.0, 0.0), &[0, 0], 8);
        assert!((one - 1.0).norm() < 1e-15);
    }

    #[test]
    fn support_radii() {
        let geo = ModelGeometry::new(Scenario::Sphere2);
        let c = &geo.charts[0];
        assert!((c.partition_support_radius().unwrap() - 3f64.sqrt()).abs() < 1e-15);
        assert!((c.cutoff_support_radius().unwrap() - 7f64.sqrt()).abs() < 1e-15);
        assert_eq!(c.partition(&[1.74, 0.0]), 0.0);
        assert!(c.partition(&[1.7, 0.0]) > 0.0);
        assert_eq!(c.cutoff(&[1.74, 0.0]), 1.0);
        assert_eq!(c.cutoff(&[2.65, 0.0]), 0.0);
    }

    #[test]
    fn orbit_data() {
        assert_eq!(orbit_info(Scenario::Circle).kappa, 1);
        assert_eq!(orbit_info(Scenario::Torus2).kappa, 2);
        let s = orbit_info(Scenario::Sphere2);
        assert_eq!((s.kappa, s.lambda), (1, 2));
    }

    #[test]
    fn scenario_names_round_trip() {
        for sc in Scenario::ALL {
            assert_eq!(sc.name().parse::<Scenario>().unwrap(), sc);
        }
        assert!("klein".parse::<Scenario>().is_err());
    }
}
