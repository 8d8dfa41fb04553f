//! Power-law and asymptotic-series fits.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Result of fitting `y = C·μ^p·(ln 1/μ)^q` with `q` held fixed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    pub exponent: f64,
    pub coefficient: f64,
    pub log_power: f64,
    /// Root-mean-square residual in log coordinates.
    pub residual: f64,
    /// Exponent refitted without the sample at the largest μ.
    pub exponent_without_largest: Option<f64>,
}

impl FitResult {
    pub fn is_stable(&self, tolerance: f64) -> bool {
        self.exponent_without_largest
            .map_or(true, |p| (p - self.exponent).abs() <= tolerance)
    }
}

/// Least-squares fit of `ln|y| - q ln ln(1/μ) = ln C + p ln μ`.
pub fn fit_leading_order(samples: &[(f64, f64)], log_power: f64) -> Result<FitResult> {
    if samples.len() < 3 {
        return Err(Error::TooFewSamples {
            required: 3,
            got: samples.len(),
        });
    }
    validate_abscissae(samples, log_power)?;
    let sign = if samples.iter().all(|s| s.1 < 0.0) {
        -1.0
    } else {
        1.0
    };
    let (p, ln_c, residual) = loglog(samples, log_power)?;
    let exponent_without_largest = if samples.len() >= 3 {
        let mut rest = samples.to_vec();
        rest.sort_by(|a, b| a.0.total_cmp(&b.0));
        rest.pop();
        Some(loglog(&rest, log_power)?.0)
    } else {
        None
    };
    Ok(FitResult {
        exponent: p,
        coefficient: sign * ln_c.exp(),
        log_power,
        residual,
        exponent_without_largest,
    })
}

fn validate_abscissae(samples: &[(f64, f64)], log_power: f64) -> Result<()> {
    for (i, &(mu, y)) in samples.iter().enumerate() {
        if !(mu > 0.0) || !y.is_finite() || y == 0.0 {
            return Err(Error::InvalidInput(format!(
                "sample {i} = ({mu}, {y}) needs μ > 0 and finite nonzero y"
            )));
        }
        if log_power != 0.0 && mu >= 1.0 {
            return Err(Error::InvalidInput(format!(
                "log factor needs μ < 1, sample {i} has μ = {mu}"
            )));
        }
        if samples[..i].iter().any(|s| s.0 == mu) {
            return Err(Error::InvalidInput(format!("duplicate μ = {mu}")));
        }
    }
    Ok(())
}

fn loglog(samples: &[(f64, f64)], q: f64) -> Result<(f64, f64, f64)> {
    let n = samples.len() as f64;
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .map(|&(mu, y)| {
            let corr = if q != 0.0 { q * (1.0 / mu).ln().ln() } else { 0.0 };
            (mu.ln(), y.abs().ln() - corr)
        })
        .collect();
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidInput("all μ values coincide".into()));
    }
    let p = sxy / sxx;
    let b = my - p * mx;
    let rss: f64 = pts.iter().map(|pt| (pt.1 - b - p * pt.0).powi(2)).sum();
    Ok((p, b, (rss / n).sqrt()))
}

/// Least-squares coefficients `c_i` of `y(t) ≈ Σ c_i t^{e_i}`.
///
/// Columns are normalised before the SVD solve, which keeps mixed
/// negative and positive powers well conditioned.
pub fn fit_series(samples: &[(f64, f64)], exponents: &[f64]) -> Result<Vec<f64>> {
    if samples.len() < exponents.len() || exponents.is_empty() {
        return Err(Error::TooFewSamples {
            required: exponents.len().max(1),
            got: samples.len(),
        });
    }
    if samples.iter().any(|s| !(s.0 > 0.0) || !s.1.is_finite()) {
        return Err(Error::InvalidInput(
            "series fit needs positive abscissae and finite values".into(),
        ));
    }
    let (m, k) = (samples.len(), exponents.len());
    let mut a = DMatrix::from_fn(m, k, |i, j| samples[i].0.powf(exponents[j]));
    let mut scale = vec![1.0; k];
    for (j, s) in scale.iter_mut().enumerate() {
        *s = a.column(j).norm();
        a.column_mut(j).scale_mut(1.0 / *s);
    }
    let y = DVector::from_iterator(m, samples.iter().map(|s| s.1));
    let svd = a.svd(true, true);
    let c = svd
        .solve(&y, 1e-14)
        .map_err(|e| Error::InvalidInput(format!("series fit failed: {e}")))?;
    Ok(c.iter().zip(&scale).map(|(c, s)| c / s).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let s: Vec<(f64, f64)> = [0.1, 0.2, 0.4, 0.8].iter().map(|&m| (m, 3.0 * m * m)).collect();
        let f = fit_leading_order(&s, 0.0).unwrap();
        assert!((f.exponent - 2.0).abs() < 1e-12);
        assert!((f.coefficient - 3.0).abs() < 1e-12);
        assert!(f.residual < 1e-12);
        assert!(f.is_stable(1e-10));
    }

    #[test]
    fn log_model() {
        let s: Vec<(f64, f64)> = [0.01, 0.03, 0.1, 0.3]
            .iter()
            .map(|&m: &f64| (m, m * m * (1.0 / m).ln()))
            .collect();
        let f = fit_leading_order(&s, 1.0).unwrap();
        assert!((f.exponent - 2.0).abs() < 1e-6);
    }

    #[test]
    fn too_few_samples() {
        assert!(matches!(
            fit_leading_order(&[(0.1, 1.0), (0.2, 2.0)], 0.0),
            Err(Error::TooFewSamples { .. })
        ));
    }

    #[test]
    fn constant_term_extraction() {
        let s: Vec<(f64, f64)> = [0.01, 0.02, 0.04, 0.08]
            .iter()
            .map(|&t: &f64| (t, 2.0 - t.sqrt()))
            .collect();
        let c = fit_series(&s, &[0.0, 0.5]).unwrap();
        assert!((c[0] - 2.0).abs() < 1e-3);
        assert!((c[1] + 1.0).abs() < 1e-3);
    }

    #[test]
    fn negative_powers() {
        let s: Vec<(f64, f64)> = [0.02, 0.03, 0.05, 0.07, 0.1]
            .iter()
            .map(|&t: &f64| (t, 1.0 / t + 1.0 / 3.0 + t / 15.0))
            .collect();
        let c = fit_series(&s, &[-1.0, 0.0, 1.0]).unwrap();
        assert!((c[0] - 1.0).abs() < 1e-10);
        assert!((c[1] - 1.0 / 3.0).abs() < 1e-9);
    }
}
