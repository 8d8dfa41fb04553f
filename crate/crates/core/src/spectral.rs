//! Closed-form spectra of the Hodge Laplacians with their equivariant
//! characters: heat character sums, supertraces and cohomological Lefschetz
//! numbers.

use num_complex::Complex64;

use crate::complexes::{binomial, de_rham, harmonic_character};
use crate::error::{Error, Result};
use crate::geometry::{GroupElement, Scenario};

/// Default mode cutoff |k| ≤ 40 for the flat scenarios.
pub const FLAT_CUTOFF: usize = 40;
/// Default degree cutoff l ≤ 60 for the sphere.
pub const SPHERE_CUTOFF: usize = 60;

pub fn default_cutoff(scenario: Scenario) -> usize {
    if scenario.is_flat() {
        FLAT_CUTOFF
    } else {
        SPHERE_CUTOFF
    }
}

/// Smallest cutoff whose omitted terms are all below `e^{-40}` at time t,
/// capped by the default.
pub fn adaptive_cutoff(scenario: Scenario, t: f64) -> usize {
    let needed = (40.0 / t).sqrt().ceil() as usize + 1;
    needed.clamp(2, default_cutoff(scenario))
}

/// How the group acts on one eigenspace.
#[derive(Debug, Clone, PartialEq)]
pub enum Character {
    /// `multiplicity · e^{i k·θ}` (flat tori, one Fourier mode per entry).
    Mode { k: Vec<i64>, multiplicity: usize },
    /// `multiplicity · D_l(φ)` with `D_l(φ) = Σ_{|m|≤l} e^{imφ}`.
    Rotation { l: usize, multiplicity: usize },
}

impl Character {
    pub fn eval(&self, g: &GroupElement) -> Complex64 {
        match self {
            Character::Mode { k, multiplicity } => {
                let phase: f64 = k.iter().zip(g.angles()).map(|(&k, a)| k as f64 * a).sum();
                Complex64::from_polar(*multiplicity as f64, phase)
            }
            Character::Rotation { l, multiplicity } => {
                Complex64::new(*multiplicity as f64 * rotation_character(*l, g.angles()[0]), 0.0)
            }
        }
    }

    /// Eigenspace dimension, the character at the identity.
    pub fn dimension(&self) -> usize {
        match self {
            Character::Mode { multiplicity, .. } => *multiplicity,
            Character::Rotation { l, multiplicity } => multiplicity * (2 * l + 1),
        }
    }

    /// Multiplicity of the character `e^{ik·θ}` in this eigenspace.
    pub fn isotypic_multiplicity(&self, k: &[i64]) -> usize {
        match self {
            Character::Mode { k: mode, multiplicity } => {
                if mode.as_slice() == k {
                    *multiplicity
                } else {
                    0
                }
            }
            Character::Rotation { l, multiplicity } => {
                if k[0].unsigned_abs() as usize <= *l {
                    *multiplicity
                } else {
                    0
                }
            }
        }
    }
}

/// `D_l(φ) = Σ_{|m|≤l} cos(mφ)`, the character of the rotation on degree-l
/// spherical harmonics.
pub fn rotation_character(l: usize, phi: f64) -> f64 {
    1.0 + 2.0 * (1..=l).map(|m| (m as f64 * phi).cos()).sum::<f64>()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralEntry {
    pub eigenvalue: f64,
    pub character: Character,
}

/// Eigenvalues below a cutoff with characters, sorted by eigenvalue.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralFamily {
    pub scenario: Scenario,
    pub degree: usize,
    pub cutoff: usize,
    pub entries: Vec<SpectralEntry>,
}

/// Spectrum of the Hodge Laplacian on j-forms.
///
/// Flat tori: each Fourier mode `k` has eigenvalue `|k|²` and carries the
/// rank of Λ^j as multiplicity. Sphere: functions and 2-forms have `l(l+1)`
/// with character `D_l`; 1-forms split into exact and coexact families,
/// each a copy of the `l ≥ 1` function spectrum.
pub fn spectral_family(scenario: Scenario, j: usize, cutoff: usize) -> Result<SpectralFamily> {
    if j > scenario.dim() {
        return Err(Error::InvalidInput(format!("{scenario} has no {j}-forms")));
    }
    let mut entries = Vec::new();
    let c = cutoff as i64;
    match scenario {
        Scenario::Circle => {
            for k in -c..=c {
                entries.push(SpectralEntry {
                    eigenvalue: (k * k) as f64,
                    character: Character::Mode {
                        k: vec![k],
                        multiplicity: 1,
                    },
                });
            }
        }
        Scenario::Torus2 => {
            let rank = binomial(2, j);
            for k1 in -c..=c {
                for k2 in -c..=c {
                    entries.push(SpectralEntry {
                        eigenvalue: (k1 * k1 + k2 * k2) as f64,
                        character: Character::Mode {
                            k: vec![k1, k2],
                            multiplicity: rank,
                        },
                    });
                }
            }
        }
        Scenario::Sphere2 => {
            let (start, multiplicity) = if j == 1 { (1, 2) } else { (0, 1) };
            for l in start..=cutoff {
                entries.push(SpectralEntry {
                    eigenvalue: (l * (l + 1)) as f64,
                    character: Character::Rotation { l, multiplicity },
                });
            }
        }
    }
    entries.sort_by(|a, b| a.eigenvalue.total_cmp(&b.eigenvalue));
    Ok(SpectralFamily {
        scenario,
        degree: j,
        cutoff,
        entries,
    })
}

/// `Σ_{|k|>K} e^{-t k²} ≤ e^{-tK²}/(tK)` by comparison with the Gaussian
/// integral.
fn one_dim_tail(t: f64, k: usize) -> f64 {
    let k = k.max(1) as f64;
    (-t * k * k).exp() / (t * k)
}

impl SpectralFamily {
    /// `Σ c(g) e^{-tλ}` over the stored entries.
    pub fn heat_sum(&self, g: &GroupElement, t: f64) -> Complex64 {
        self.entries
            .iter()
            .rev()
            .map(|e| e.character.eval(g) * (-t * e.eigenvalue).exp())
            .sum()
    }
}

/// Certified bound on `Σ_{λ > cutoff} |c(g)| e^{-tλ}`.
pub fn tail_bound(scenario: Scenario, j: usize, t: f64, cutoff: usize) -> Result<f64> {
    match scenario {
        Scenario::Circle => Ok(one_dim_tail(t, cutoff)),
        Scenario::Torus2 => {
            let t1 = one_dim_tail(t, cutoff);
            let c = cutoff as i64;
            let s: f64 = (-c..=c).map(|k| (-t * (k * k) as f64).exp()).sum();
            // full 2-D sum minus the truncated square
            Ok(binomial(2, j) as f64 * (2.0 * s * t1 + t1 * t1))
        }
        Scenario::Sphere2 => {
            let l = cutoff as f64;
            // (2x+1) e^{-t x(x+1)} is decreasing on [L, ∞) when t(2L+1)² > 2
            if t * (2.0 * l + 1.0).powi(2) <= 2.0 {
                return Err(Error::InvalidInput(format!(
                    "cutoff l ≤ {cutoff} too small for a certified tail at t = {t}"
                )));
            }
            let mult = if j == 1 { 2.0 } else { 1.0 };
            Ok(mult * (-t * l * (l + 1.0)).exp() / t)
        }
    }
}

/// `Σ_{λ ≤ cutoff} c(g) e^{-tλ}` with a certified tail bound.
pub fn heat_character_sum(
    scenario: Scenario,
    j: usize,
    g: &GroupElement,
    t: f64,
    cutoff: usize,
) -> Result<(Complex64, f64)> {
    if !(t > 0.0) {
        return Err(Error::InvalidInput(format!("heat time must be positive, got {t}")));
    }
    let family = spectral_family(scenario, j, cutoff)?;
    let tail = tail_bound(scenario, j, t, cutoff)?;
    Ok((family.heat_sum(g, t), tail))
}

/// `(1/vol G) ∫ tr(T_j(g) e^{-tΔ_j}) conj(ρ_k(g)) dg`: each eigenspace
/// contributes the multiplicity of `ρ_k` in it.
pub fn isotypic_heat_trace(
    scenario: Scenario,
    j: usize,
    k: &[i64],
    t: f64,
    cutoff: usize,
) -> Result<(f64, f64)> {
    if !(t > 0.0) {
        return Err(Error::InvalidInput(format!("heat time must be positive, got {t}")));
    }
    let family = spectral_family(scenario, j, cutoff)?;
    let tail = tail_bound(scenario, j, t, cutoff)?;
    let value = family
        .entries
        .iter()
        .rev()
        .map(|e| e.character.isotypic_multiplicity(k) as f64 * (-t * e.eigenvalue).exp())
        .sum();
    Ok((value, tail))
}

/// `Σ_j (-1)^j tr(T_j(g) e^{-tΔ_j})` with the summed tail bound.
pub fn supertrace(scenario: Scenario, g: &GroupElement, t: f64) -> Result<(Complex64, f64)> {
    let cutoff = default_cutoff(scenario);
    let mut value = Complex64::new(0.0, 0.0);
    let mut tail = 0.0;
    for j in 0..=scenario.dim() {
        let (v, b) = heat_character_sum(scenario, j, g, t, cutoff)?;
        value += if j % 2 == 0 { v } else { -v };
        tail += b;
    }
    Ok((value, tail))
}

/// `Σ_j (-1)^j tr(g^* | H^j)`.
pub fn lefschetz_cohomology(scenario: Scenario, g: &GroupElement) -> Complex64 {
    de_rham(scenario)
        .degrees()
        .map(|j| {
            let c = harmonic_character(scenario, j, g);
            if j % 2 == 0 {
                c
            } else {
                -c
            }
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_large_time() {
        let (v, _) = heat_character_sum(Scenario::Sphere2, 0, &GroupElement::new(vec![0.4]), 40.0, 60).unwrap();
        assert!((v.re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn eigenvalues_sorted_and_characters_bounded() {
        let g = GroupElement::new(vec![1.3, 0.2]);
        let f = spectral_family(Scenario::Torus2, 1, 10).unwrap();
        assert!(f.entries.windows(2).all(|w| w[0].eigenvalue <= w[1].eigenvalue));
        for e in &f.entries {
            assert!(e.character.eval(&g).norm() <= e.character.dimension() as f64 + 1e-12);
        }
    }

    #[test]
    fn identity_characters_are_dimensions() {
        let f = spectral_family(Scenario::Sphere2, 1, 20).unwrap();
        for e in &f.entries {
            let c = e.character.eval(&GroupElement::identity(1));
            assert_eq!(c.re, e.character.dimension() as f64);
        }
    }

    #[test]
    fn cohomology_values() {
        let g = GroupElement::new(vec![0.5]);
        assert_eq!(lefschetz_cohomology(Scenario::Sphere2, &g).re, 2.0);
        assert_eq!(lefschetz_cohomology(Scenario::Circle, &g).re, 0.0);
        assert_eq!(lefschetz_cohomology(Scenario::Torus2, &GroupElement::identity(2)).re, 0.0);
    }

    #[test]
    fn rejects_nonpositive_time() {
        assert!(heat_character_sum(Scenario::Circle, 0, &GroupElement::identity(1), 0.0, 40).is_err());
    }

    #[test]
    fn tail_needs_large_cutoff() {
        assert!(tail_bound(Scenario::Sphere2, 0, 1e-4, 10).is_err());
    }
}
