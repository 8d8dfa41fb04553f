//! The De Rham complex on the model scenarios: ranks and Betti numbers,
//! pullback matrices, harmonic characters and chart symbols of the Hodge
//! Laplacians.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{act, ChartPoint, GroupElement, ModelGeometry, Scenario};
use crate::parametrix::SymPoly;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeRhamData {
    pub scenario: Scenario,
    /// Rank of Λ^j T*M, j = 0..=n.
    pub ranks: Vec<usize>,
    pub betti: Vec<usize>,
}

impl DeRhamData {
    pub fn euler_characteristic(&self) -> i64 {
        self.betti
            .iter()
            .enumerate()
            .map(|(j, &b)| if j % 2 == 0 { b as i64 } else { -(b as i64) })
            .sum()
    }

    pub fn degrees(&self) -> std::ops::RangeInclusive<usize> {
        0..=self.ranks.len() - 1
    }
}

pub fn de_rham(scenario: Scenario) -> DeRhamData {
    let n = scenario.dim();
    let ranks = (0..=n).map(|j| binomial(n, j)).collect();
    let betti = match scenario {
        Scenario::Circle => vec![1, 1],
        Scenario::Torus2 => vec![1, 2, 1],
        Scenario::Sphere2 => vec![1, 0, 1],
    };
    DeRhamData {
        scenario,
        ranks,
        betti,
    }
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// All `j`-element subsets of `0..n` in lexicographic order.
pub fn subsets(n: usize, j: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, j: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == j {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, j, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, j, &mut Vec::new(), &mut out);
    out
}

/// j-th compound matrix: minors indexed by lexicographic j-subsets.
pub fn compound_matrix(m: &DMatrix<f64>, j: usize) -> DMatrix<f64> {
    let (rows, cols) = (subsets(m.nrows(), j), subsets(m.ncols(), j));
    DMatrix::from_fn(rows.len(), cols.len(), |a, b| {
        if j == 0 {
            return 1.0;
        }
        DMatrix::from_fn(j, j, |p, q| m[(rows[a][p], cols[b][q])]).determinant()
    })
}

/// Matrix of `T_j(g) = g^*` on j-forms in the coordinate coframes `dx^I`:
/// coefficients at `g·x` are mapped to coefficients at `x` by `Λ^j(dg_xᵀ)`.
pub fn pullback_matrix(
    scenario: Scenario,
    j: usize,
    g: &GroupElement,
    point: &ChartPoint,
) -> Result<DMatrix<f64>> {
    if j > scenario.dim() {
        return Err(Error::InvalidInput(format!(
            "{scenario} has no forms of degree {j}"
        )));
    }
    let (_, dg) = act(scenario, g, point)?;
    Ok(compound_matrix(&dg.transpose(), j))
}

/// Trace of the map induced by `g` on `H^j(M)`.
///
/// All built-in actions are by torus elements homotopic to the identity, so
/// they act trivially on cohomology.
pub fn harmonic_character(scenario: Scenario, j: usize, _g: &GroupElement) -> Complex64 {
    let b = de_rham(scenario).betti.get(j).copied().unwrap_or(0);
    Complex64::new(b as f64, 0.0)
}

/// Chart symbol `p = p₂ + p₁ + p₀` of the Hodge Laplacian on j-forms.
///
/// Every supported case is scalar: `p₂ = |ξ|²_g · Id` and `p₁ = p₀ = 0`
/// (flat Hodge Laplacians in coordinate coframes, and the Laplace–Beltrami
/// operator of a conformally flat surface metric). The matrix structure is
/// therefore carried by `rank` alone.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalSymbol {
    pub scenario: Scenario,
    pub degree: usize,
    pub chart: usize,
    pub rank: usize,
}

pub fn laplace_symbol(scenario: Scenario, j: usize, chart: usize) -> Result<LocalSymbol> {
    if j > scenario.dim() {
        return Err(Error::InvalidInput(format!(
            "{scenario} has no forms of degree {j}"
        )));
    }
    ModelGeometry::new(scenario).chart(chart)?;
    if scenario == Scenario::Sphere2 && j > 0 {
        return Err(Error::SpectralOracleOnly {
            scenario: scenario.name().into(),
            degree: j,
        });
    }
    Ok(LocalSymbol {
        scenario,
        degree: j,
        chart,
        rank: binomial(scenario.dim(), j),
    })
}

impl LocalSymbol {
    /// Homogeneous parts `[p₀, p₁, p₂]` at `coords`, as ξ-polynomials with
    /// x-jets of the given order.
    pub fn parts(&self, coords: &[f64], order: usize) -> Result<[SymPoly; 3]> {
        let geo = ModelGeometry::new(self.scenario);
        let ginv = geo.chart(self.chart)?.inverse_metric_jet(coords, order)?;
        let n = self.scenario.dim();
        let mut p2 = SymPoly::zero(n);
        for (i, row) in ginv.iter().enumerate() {
            for (k, entry) in row.iter().enumerate() {
                let mut e = vec![0u8; n];
                e[i] += 1;
                e[k] += 1;
                p2.add_term(e, entry.to_complex());
            }
        }
        Ok([SymPoly::zero(n), SymPoly::zero(n), p2])
    }

    /// Value of the principal symbol `p₂(x, ξ)`.
    pub fn principal_value(&self, coords: &[f64], xi: &[f64]) -> Result<f64> {
        Ok(self.parts(coords, 0)?[2].eval(xi).re)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn euler_characteristics() {
        assert_eq!(de_rham(Scenario::Sphere2).euler_characteristic(), 2);
        assert_eq!(de_rham(Scenario::Circle).euler_characteristic(), 0);
        assert_eq!(de_rham(Scenario::Torus2).euler_characteristic(), 0);
    }

    #[test]
    fn alternating_rank_sum_vanishes() {
        for sc in Scenario::ALL {
            let d = de_rham(sc);
            let s: i64 = d
                .ranks
                .iter()
                .enumerate()
                .map(|(j, &r)| if j % 2 == 0 { r as i64 } else { -(r as i64) })
                .sum();
            assert_eq!(s, 0);
        }
    }

    #[test]
    fn functions_pull_back_by_composition() {
        for sc in Scenario::ALL {
            let m = pullback_matrix(
                sc,
                0,
                &GroupElement::new(vec![1.1; sc.group_dim()]),
                &ChartPoint::new(0, vec![0.4; sc.dim()]),
            )
            .unwrap();
            assert_eq!(m, DMatrix::from_element(1, 1, 1.0));
        }
    }

    #[test]
    fn sphere_one_forms_rotate_by_transpose() {
        let phi = 0.9f64;
        let m = pullback_matrix(
            Scenario::Sphere2,
            1,
            &GroupElement::new(vec![phi]),
            &ChartPoint::new(0, vec![0.2, 0.5]),
        )
        .unwrap();
        let rot_t = DMatrix::from_row_slice(2, 2, &[phi.cos(), phi.sin(), -phi.sin(), phi.cos()]);
        assert!((m - rot_t).norm() < 1e-14);
    }

    #[test]
    fn circle_one_form_is_invariant() {
        let m = pullback_matrix(
            Scenario::Circle,
            1,
            &GroupElement::new(vec![2.0]),
            &ChartPoint::new(0, vec![1.0]),
        )
        .unwrap();
        assert_eq!(m[(0, 0)], 1.0);
    }

    #[test]
    fn harmonic_characters() {
        let g = GroupElement::new(vec![0.3]);
        let s: Vec<f64> = (0..3).map(|j| harmonic_character(Scenario::Sphere2, j, &g).re).collect();
        assert_eq!(s, vec![1.0, 0.0, 1.0]);
        assert_eq!(
            harmonic_character(Scenario::Torus2, 1, &GroupElement::new(vec![0.3, 0.1])).re,
            2.0
        );
        assert_eq!(harmonic_character(Scenario::Circle, 1, &g).re, 1.0);
    }

    #[test]
    fn sphere_forms_are_spectral_only() {
        assert!(matches!(
            laplace_symbol(Scenario::Sphere2, 1, 0),
            Err(Error::SpectralOracleOnly { degree: 1, .. })
        ));
        assert!(laplace_symbol(Scenario::Torus2, 2, 0).is_ok());
    }

    #[test]
    fn sphere_principal_symbol() {
        let s = laplace_symbol(Scenario::Sphere2, 0, 0).unwrap();
        let (x, xi) = ([0.3, -0.7], [1.2, 0.4]);
        let r2: f64 = x.iter().map(|v| v * v).sum();
        let expect = (1.0 + r2).powi(2) * (1.44 + 0.16) / 4.0;
        assert!((s.principal_value(&x, &xi).unwrap() - expect).abs() < 1e-14);
        let flat = laplace_symbol(Scenario::Circle, 0, 0).unwrap();
        assert_eq!(flat.principal_value(&[1.0], &[3.0]).unwrap(), 9.0);
    }

    #[test]
    fn compound_of_identity() {
        let id = DMatrix::<f64>::identity(3, 3);
        assert_eq!(compound_matrix(&id, 2), DMatrix::identity(3, 3));
        assert_eq!(compound_matrix(&id, 0), DMatrix::from_element(1, 1, 1.0));
    }
}
